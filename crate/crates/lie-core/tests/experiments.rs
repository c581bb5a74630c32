//! The two averaging experiments and two filter-level oracles that need
//! sampling.

use lie_core::averaging::{karcher_mean, AveragingConfig};
use lie_core::filtercore::{dlgekf_predict, dlgekf_rie_predict, Belief, MotionModel};
use lie_core::groups::{rotation_to_rpy, rpy_to_rotation};
use lie_core::uncertainty::{transport_covariance, GaussianOnGroup, Side, Transport};
use lie_core::{GroupElement64, GroupTag, Pose64, Result};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn rpy_deg(r: &nalgebra::Matrix3<f64>) -> [f64; 3] {
    let (a, b, c) = rotation_to_rpy(r).unwrap();
    [a.to_degrees(), b.to_degrees(), c.to_degrees()]
}

fn ten_degrees() -> nalgebra::Matrix3<f64> {
    let t = 10f64.to_radians();
    rpy_to_rotation(t, t, t)
}

fn average(samples: &[GroupElement64]) -> GroupElement64 {
    let w = vec![1.0; samples.len()];
    karcher_mean(samples, &w, &AveragingConfig { step_size: 0.1, tolerance: 1e-4, max_iters: 100 }).unwrap()
}

#[test]
fn rotation_average_of_a_thousand_samples() {
    let mean = GroupElement64::new(GroupTag::SO3, DMatrix::from_iterator(3, 3, ten_degrees().iter().copied())).unwrap();
    let cgd = GaussianOnGroup::new(mean, DMatrix::identity(3, 3) * 0.05f64.powi(2), Side::LocalRight).unwrap();
    let samples = cgd.sample_seeded(1000, 7).unwrap();
    let fused = average(&samples);
    let got = rpy_deg(&fused.matrix().fixed_view::<3, 3>(0, 0).into_owned());
    for (g, want) in got.iter().zip([10.0; 3]) {
        assert!((g - want).abs() < 0.3, "{got:?}");
    }
}

#[test]
fn pose_average_of_a_thousand_samples() {
    let mean = Pose64::new(ten_degrees(), Vector3::new(0.0, 0.5, 0.0)).to_element();
    let cgd = GaussianOnGroup::new(mean, DMatrix::identity(6, 6) * 0.05f64.powi(2), Side::LocalRight).unwrap();
    let samples = cgd.sample_seeded(1000, 7).unwrap();
    let fused = Pose64::from_homogeneous(average(&samples).matrix());
    let got = rpy_deg(&fused.rot);
    for g in got {
        assert!((g - 10.0).abs() < 0.5, "{got:?}");
    }
    for (g, want) in fused.trans.iter().zip([0.0, 0.5, 0.0]) {
        assert!((g - want).abs() < 0.01, "{:?}", fused.trans);
    }
}

/// Constant body rate on SO(3) with additive tangent noise.
struct Gyro {
    omega: DVector<f64>,
    q: DMatrix<f64>,
}

impl MotionModel<f64> for Gyro {
    type Input = ();
    fn omega(&self, _: &GroupElement64, _: &()) -> Result<DVector<f64>> {
        Ok(self.omega.clone())
    }
    fn jacobian(&self, _: &GroupElement64, _: &()) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(3, 3))
    }
    fn noise(&self, _: &GroupElement64, _: &()) -> Result<DMatrix<f64>> {
        Ok(self.q.clone())
    }
}

fn so3(v: [f64; 3]) -> GroupElement64 {
    lie_core::TangentVector64::from_slice(GroupTag::SO3, &v).unwrap().exp()
}

#[test]
fn predicted_covariance_matches_monte_carlo() {
    let mean = so3([0.3, -0.2, 0.4]);
    let p = DMatrix::from_row_slice(3, 3, &[4e-3, 1e-3, 0.0, 1e-3, 2e-3, 0.0, 0.0, 0.0, 3e-3]);
    let model = Gyro { omega: DVector::from_vec(vec![0.5, 0.8, -0.6]), q: DMatrix::from_diagonal(&DVector::from_vec(vec![2e-3, 1e-3, 3e-3])) };
    let prior = Belief::new(mean.clone(), p.clone()).unwrap();
    let post = dlgekf_predict(&prior, &model, &()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lp = p.clone().cholesky().unwrap().l();
    let lq = model.q.clone().cholesky().unwrap().l();
    let draw = |rng: &mut ChaCha8Rng, l: &DMatrix<f64>| l * DVector::from_fn(3, |_, _| StandardNormal.sample(rng));
    let n = 100_000;
    let mut acc = DMatrix::zeros(3, 3);
    let post_inv = post.mean.inverse();
    for _ in 0..n {
        let x = mean.oplus_right(&draw(&mut rng, &lp)).unwrap();
        let next = x.oplus_right(&(&model.omega + draw(&mut rng, &lq))).unwrap();
        let e = post_inv.compose(&next).unwrap().logvee().unwrap();
        acc += &e * e.transpose();
    }
    let empirical = acc / n as f64;
    for i in 0..3 {
        let rel = (empirical[(i, i)] - post.cov[(i, i)]).abs() / post.cov[(i, i)];
        assert!(rel < 0.05, "axis {i}: {} vs {}", empirical[(i, i)], post.cov[(i, i)]);
    }
}

#[test]
fn left_and_right_predictions_agree_after_transport() {
    let model = Gyro { omega: DVector::from_vec(vec![0.2, -0.1, 0.3]), q: DMatrix::identity(3, 3) * 1e-3 };
    let prior = Belief::new(GroupElement64::identity(GroupTag::SO3), DMatrix::identity(3, 3) * 0.01).unwrap();
    let left = dlgekf_predict(&prior, &model, &()).unwrap();
    let right = dlgekf_rie_predict(&prior, &model, &()).unwrap();
    assert!(left.mean.distance(&right.mean).unwrap() < 1e-15);
    let moved = transport_covariance(&left.cov, &left.mean, Transport::LeftToRight);
    assert!((moved - &right.cov).amax() < 1e-6);
}
