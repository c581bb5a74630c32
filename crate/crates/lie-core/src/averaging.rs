//! Weighted Karcher means, Bayesian fusion of concentrated Gaussians and
//! landmark-based pose fusion.

use nalgebra::{DMatrix, DVector};

use crate::error::{LieError, Result};
use crate::groups::{GroupElement, Pose};
use crate::scalar::Real;
use crate::uncertainty::symmetrize;

/// Gradient-descent settings shared by the averaging routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingConfig<T> {
    pub step_size: T,
    pub tolerance: T,
    pub max_iters: usize,
}

impl<T: Real> Default for AveragingConfig<T> {
    fn default() -> Self {
        Self { step_size: T::lit(0.1), tolerance: T::lit(1e-4), max_iters: 100 }
    }
}

/// Added to covariances before inversion.
const REGULARIZATION: f64 = 1e-12;

fn normalized<T: Real>(weights: &[T], n: usize) -> Result<Vec<T>> {
    if weights.len() != n {
        return Err(LieError::DimensionMismatch { expected: n, got: weights.len() });
    }
    if weights.iter().any(|w| *w < T::zero()) {
        return Err(LieError::InvalidArgument("weights must be non-negative".into()));
    }
    let sum = weights.iter().fold(T::zero(), |a, w| a + *w);
    if sum <= T::zero() {
        return Err(LieError::InvalidArgument("weights sum to zero".into()));
    }
    Ok(weights.iter().map(|w| *w / sum).collect())
}

/// Weighted Karcher mean by fixed-step gradient descent, starting at the
/// first element. Weights are renormalised to sum to one.
pub fn karcher_mean<T: Real>(
    elements: &[GroupElement<T>],
    weights: &[T],
    cfg: &AveragingConfig<T>,
) -> Result<GroupElement<T>> {
    if elements.is_empty() {
        return Err(LieError::InvalidArgument("no elements to average".into()));
    }
    let w = normalized(weights, elements.len())?;
    let tag = elements[0].tag();
    if elements.iter().any(|e| e.tag() != tag) {
        return Err(LieError::InvalidArgument("elements belong to different groups".into()));
    }

    let mut x = elements[0].clone();
    let mut residual = T::zero();
    for _ in 0..cfg.max_iters {
        let xinv = x.inverse();
        let mut r = DVector::zeros(tag.dim());
        for (e, wi) in elements.iter().zip(&w) {
            r += xinv.compose(e)?.logvee()? * *wi;
        }
        residual = r.norm();
        if residual < cfg.tolerance {
            return Ok(x);
        }
        x = x.oplus_right(&(r * cfg.step_size))?;
    }
    Err(LieError::ConvergenceFailure { iterations: cfg.max_iters, residual: residual.to_f64_lossy() })
}

fn regularized_inverse<T: Real>(p: &DMatrix<T>) -> Result<DMatrix<T>> {
    let reg = p + DMatrix::identity(p.nrows(), p.ncols()) * T::lit(REGULARIZATION);
    reg.cholesky()
        .map(|c| c.inverse())
        .or_else(|| p.clone().try_inverse())
        .ok_or_else(|| LieError::Singular("estimate covariance".into()))
}

/// Fuses independent estimates `X = X_k exp(n_k)`, `n_k ~ N(0, P_k)` by
/// Gauss-Newton on the group. Returns the fused mean and the inverse of the
/// final information matrix.
pub fn bayesian_fuse<T: Real>(
    estimates: &[(GroupElement<T>, DMatrix<T>)],
    cfg: &AveragingConfig<T>,
) -> Result<(GroupElement<T>, DMatrix<T>)> {
    match estimates {
        [] => return Err(LieError::InvalidArgument("no estimates to fuse".into())),
        [(x, p)] => return Ok((x.clone(), p.clone())),
        _ => {}
    }
    let tag = estimates[0].0.tag().clone();
    let d = tag.dim();
    let infos = estimates
        .iter()
        .map(|(x, p)| {
            if x.tag() != &tag || p.nrows() != d || p.ncols() != d {
                return Err(LieError::InvalidArgument("estimates must share one group".into()));
            }
            regularized_inverse(p)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut x = estimates[0].0.clone();
    let mut step = T::zero();
    for _ in 0..cfg.max_iters {
        let xinv = x.inverse();
        let mut a = DMatrix::zeros(d, d);
        let mut g = DVector::zeros(d);
        for ((xk, _), info) in estimates.iter().zip(&infos) {
            let eps = xinv.compose(xk)?.logvee()?;
            let jinv = tag.left_jacobian_inv(&eps)?;
            let jt_info = jinv.transpose() * info;
            a += &jt_info * &jinv;
            g += &jt_info * eps;
        }
        let chol = a.clone().cholesky().ok_or(LieError::Singular("fused information".into()))?;
        let delta = chol.solve(&g);
        step = delta.norm();
        if step < cfg.tolerance {
            return Ok((x.oplus_right(&delta)?, symmetrize(&chol.inverse())));
        }
        x = x.oplus_right(&delta)?;
    }
    Err(LieError::ConvergenceFailure { iterations: cfg.max_iters, residual: step.to_f64_lossy() })
}

/// Pose of frame B in frame A from landmarks seen in both frames.
///
/// Each landmark gives a candidate `H_AL H_BL^-1`; candidates are averaged
/// with weights proportional to the inverse distance of the landmark from B.
pub fn landmark_pose_fusion<T: Real>(
    in_a: &[Pose<T>],
    in_b: &[Pose<T>],
    cfg: &AveragingConfig<T>,
) -> Result<Pose<T>> {
    if in_a.len() != in_b.len() {
        return Err(LieError::DimensionMismatch { expected: in_a.len(), got: in_b.len() });
    }
    if in_a.is_empty() {
        return Err(LieError::InvalidArgument("no landmarks".into()));
    }
    let floor = T::lit(1e-9);
    let candidates: Vec<_> = in_a.iter().zip(in_b).map(|(a, b)| (*a * b.inverse()).to_element()).collect();
    let weights: Vec<T> = in_b.iter().map(|b| T::one() / b.trans.norm().max(floor)).collect();
    let mean = karcher_mean(&candidates, &weights, cfg)?;
    Ok(Pose::from_homogeneous(mean.matrix()))
}
