mod common;

use approx::assert_relative_eq;
use common::*;
use lie_core::groups::so3;
use lie_core::GroupTag;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-10;

#[test]
fn hat_of_so3_is_the_cross_product_matrix() {
    let v = Vector3::new(1.0, -2.0, 0.5);
    let w = Vector3::new(0.3, 0.7, -1.1);
    assert_relative_eq!(so3::skew(&v) * w, v.cross(&w), epsilon = 1e-15);
}

#[test]
fn exp_matches_matrix_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for tag in families() {
        for _ in 0..200 {
            let v = random_tangent(&mut rng, tag.dim(), 2.0);
            let err = max_abs(&(tag.exp(&v).unwrap() - exp_series(&tag, &v)));
            assert!(err < TOL, "{tag:?}: exp error {err}");
        }
    }
}

#[test]
fn left_jacobian_matches_series_and_inverse_matches_dense_inversion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for tag in families() {
        for _ in 0..200 {
            let v = random_tangent(&mut rng, tag.dim(), 2.0);
            let series = jl_series(&tag, &v);
            let jl = tag.left_jacobian(&v).unwrap();
            assert!(max_abs(&(&jl - &series)) < TOL, "{tag:?}: J_l");
            let dense_inv = series.clone().try_inverse().unwrap();
            let jinv = tag.left_jacobian_inv(&v).unwrap();
            assert!(max_abs(&(&jinv - &dense_inv)) < TOL, "{tag:?}: J_l^-1");
            let jr = tag.right_jacobian(&v).unwrap();
            let jr_series = mat_series(&-ad_from_bracket(&tag, &v), |k| 1.0 / factorial(k + 1), 30);
            assert!(max_abs(&(&jr - &jr_series)) < TOL, "{tag:?}: J_r");
        }
    }
}

#[test]
fn adjoint_matches_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for tag in families() {
        for _ in 0..100 {
            let x = tag.exp(&random_tangent(&mut rng, tag.dim(), 3.0)).unwrap();
            let err = max_abs(&(tag.adjoint(&x).unwrap() - adjoint_by_conjugation(&tag, &x)));
            assert!(err < TOL, "{tag:?}: adjoint error {err}");
        }
    }
}

#[test]
fn small_adjoint_matches_bracket() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for tag in families() {
        let v = random_tangent(&mut rng, tag.dim(), 2.0);
        assert_relative_eq!(tag.small_adjoint(&v).unwrap(), ad_from_bracket(&tag, &v), epsilon = 1e-14);
    }
}

#[test]
fn q_block_is_the_se3_series_off_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let v = random_tangent(&mut rng, 6, 2.0);
        let series = jl_series(&GroupTag::SE3, &v);
        let rho = Vector3::new(v[0], v[1], v[2]);
        let phi = Vector3::new(v[3], v[4], v[5]);
        let q = so3::q_left(&rho, &phi);
        let block: Matrix3<f64> = series.fixed_view::<3, 3>(0, 3).into_owned();
        assert_relative_eq!(q, block, epsilon = TOL);
    }
}

#[test]
fn small_angles_use_series_without_loss() {
    for theta in [0.0, 1e-12, 1e-9, 1e-6, 1e-4, 2e-3, 3e-3, 1e-2] {
        let v = DVector::from_vec(vec![0.3, -0.2, 0.1, theta * 0.6, -theta * 0.8, 0.0]);
        let tag = GroupTag::SE3;
        assert!(max_abs(&(tag.exp(&v).unwrap() - exp_series(&tag, &v))) < 1e-14);
        let e = max_abs(&(tag.left_jacobian(&v).unwrap() - jl_series(&tag, &v)));
        assert!(e < 1e-14, "theta = {theta}: {e}");
        let dense = jl_series(&tag, &v).try_inverse().unwrap();
        let e = max_abs(&(tag.left_jacobian_inv(&v).unwrap() - dense));
        assert!(e < 1e-13, "theta = {theta}: {e}");
        let back = tag.log(&tag.exp(&v).unwrap()).unwrap();
        assert!((back - &v).amax() < 1e-14, "theta = {theta}");
    }
}

#[test]
fn log_is_accurate_close_to_pi() {
    let axis = Vector3::new(1.0, 2.0, -2.0) / 3.0;
    for gap in [1e-2, 1e-4, 1e-6, 1e-8] {
        let phi = axis * (std::f64::consts::PI - gap);
        let back = so3::log(&so3::exp(&phi)).unwrap();
        assert!((back - phi).amax() < 1e-7, "gap {gap}");
    }
}

#[test]
fn log_at_pi_reports_both_axes() {
    let axis = Vector3::new(0.0, 0.6, 0.8);
    let r = so3::exp(&(axis * std::f64::consts::PI));
    match so3::log(&r) {
        Err(lie_core::LieError::AmbiguousLog { axes, .. }) => {
            let a = Vector3::from(axes[0]);
            let b = Vector3::from(axes[1]);
            assert_relative_eq!(a.dot(&axis).abs(), 1.0, epsilon = 1e-8);
            assert_relative_eq!(a, -b);
        }
        other => panic!("expected ambiguity, got {other:?}"),
    }
}

#[test]
fn jacobian_inverse_is_singular_at_two_pi() {
    let phi = Vector3::new(0.0, 0.0, 2.0 * std::f64::consts::PI);
    assert!(matches!(so3::left_jacobian_inv(&phi), Err(lie_core::LieError::SingularJacobian { .. })));
}

#[test]
fn composite_blocks_are_independent() {
    let tag = GroupTag::Composite(vec![GroupTag::SO3, GroupTag::Tn(2)]);
    let v = DVector::from_vec(vec![0.1, 0.2, 0.3, 4.0, 5.0]);
    let m = tag.exp(&v).unwrap();
    let r = so3::exp(&Vector3::new(0.1, 0.2, 0.3));
    let mut want = DMatrix::<f64>::identity(6, 6);
    want.view_mut((0, 0), (3, 3)).copy_from(&r);
    want[(3, 5)] = 4.0;
    want[(4, 5)] = 5.0;
    assert_relative_eq!(m, want, epsilon = 1e-15);
}
