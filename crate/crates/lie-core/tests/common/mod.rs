#![allow(dead_code)]

use lie_core::GroupTag;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn families() -> Vec<GroupTag> {
    vec![
        GroupTag::SO3,
        GroupTag::SE3,
        GroupTag::SEk3(2),
        GroupTag::SEk3(3),
        GroupTag::Tn(3),
        GroupTag::Composite(vec![GroupTag::SEk3(2), GroupTag::SE3, GroupTag::Tn(6)]),
    ]
}

/// Uniform direction, norm uniform in `(0, max_norm]`.
pub fn random_tangent<R: Rng>(rng: &mut R, dim: usize, max_norm: f64) -> DVector<f64> {
    let v = DVector::<f64>::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let n = v.norm().max(1e-300);
    v * (rng.random_range(0.0..1.0f64).max(1e-3) * max_norm / n)
}

pub fn mat_series(a: &DMatrix<f64>, coeff: impl Fn(usize) -> f64, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    let mut pow = DMatrix::identity(n, n);
    for k in 0..terms {
        out += &pow * coeff(k);
        pow = &pow * a;
    }
    out
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, b| a * b as f64)
}

/// `ad(v)` from matrix commutators of basis elements.
pub fn ad_from_bracket(tag: &GroupTag, v: &DVector<f64>) -> DMatrix<f64> {
    let d = tag.dim();
    let hv = tag.hat(v).unwrap();
    let mut ad = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        let he = tag.hat(&e).unwrap();
        ad.set_column(i, &tag.vee(&(&hv * &he - &he * &hv)).unwrap());
    }
    ad
}

pub fn exp_series(tag: &GroupTag, v: &DVector<f64>) -> DMatrix<f64> {
    mat_series(&tag.hat(v).unwrap(), |k| 1.0 / factorial(k), 30)
}

pub fn jl_series(tag: &GroupTag, v: &DVector<f64>) -> DMatrix<f64> {
    mat_series(&ad_from_bracket(tag, v), |k| 1.0 / factorial(k + 1), 30)
}

pub fn adjoint_by_conjugation(tag: &GroupTag, x: &DMatrix<f64>) -> DMatrix<f64> {
    let d = tag.dim();
    let xinv = x.clone().try_inverse().unwrap();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        a.set_column(i, &tag.vee(&(x * tag.hat(&e).unwrap() * &xinv)).unwrap());
    }
    a
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}
