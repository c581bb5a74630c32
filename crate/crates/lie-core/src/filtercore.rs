//! Group-filter engines: the discrete Lie group EKF with local (left) or
//! global (right) error, and the invariant EKF.
//!
//! Models supply `Omega`, its Jacobian and noise; the engines own the
//! covariance algebra. Every engine step leaves the covariance symmetric.

use nalgebra::{DMatrix, DVector};

use crate::error::{LieError, Result};
use crate::groups::GroupElement;
use crate::scalar::Real;
use crate::uncertainty::symmetrize;

/// Mean and error covariance of a group-valued state.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<T: Real> {
    pub mean: GroupElement<T>,
    pub cov: DMatrix<T>,
}

impl<T: Real> Belief<T> {
    pub fn new(mean: GroupElement<T>, cov: DMatrix<T>) -> Result<Self> {
        let d = mean.tag().dim();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(LieError::DimensionMismatch { expected: d, got: cov.nrows() });
        }
        Ok(Self { mean, cov })
    }
}

/// Discrete motion `X_{k+1} = X_k exp(Omega(X_k, u_k) + w_k)`.
pub trait MotionModel<T: Real> {
    type Input;

    fn omega(&self, x: &GroupElement<T>, u: &Self::Input) -> Result<DVector<T>>;

    /// Derivative of `Omega` with respect to the state error, for the error
    /// convention of the engine it is used with.
    fn jacobian(&self, x: &GroupElement<T>, u: &Self::Input) -> Result<DMatrix<T>>;

    /// Covariance of `w_k`.
    fn noise(&self, x: &GroupElement<T>, u: &Self::Input) -> Result<DMatrix<T>>;

    /// Mean propagation. Defaults to `X exp(Omega)`.
    fn propagate(&self, x: &GroupElement<T>, u: &Self::Input) -> Result<GroupElement<T>> {
        x.oplus_right(&self.omega(x, u)?)
    }
}

/// Group-valued measurement `Z = h(X) exp(n)`.
pub trait MeasurementModel<T: Real> {
    fn predict(&self, x: &GroupElement<T>) -> Result<GroupElement<T>>;

    /// Derivative of `logvee(h(X_hat)^-1 h(X))` with respect to the state error.
    fn jacobian(&self, x: &GroupElement<T>) -> Result<DMatrix<T>>;

    fn noise(&self, x: &GroupElement<T>) -> Result<DMatrix<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOptions<T> {
    /// Joseph-form covariance update.
    pub joseph: bool,
    /// Reject when the squared Mahalanobis distance exceeds this value.
    pub gate: Option<T>,
}

impl<T> Default for UpdateOptions<T> {
    fn default() -> Self {
        Self { joseph: false, gate: None }
    }
}

/// Result of a linear Kalman correction in tangent coordinates.
#[derive(Debug, Clone)]
pub struct Correction<T: Real> {
    /// Tangent correction `m = K y`.
    pub step: DVector<T>,
    /// Covariance after the linear update, before any reset Jacobian.
    pub cov: DMatrix<T>,
    /// Squared Mahalanobis distance of the innovation.
    pub mahalanobis: T,
}

/// `K = P H^T (H P H^T + N)^-1`, `m = K y`, `P = (I - K H) P`.
pub fn kalman_correction<T: Real>(
    cov: &DMatrix<T>,
    h: &DMatrix<T>,
    n: &DMatrix<T>,
    innovation: &DVector<T>,
    opts: &UpdateOptions<T>,
) -> Result<Correction<T>> {
    let d = cov.nrows();
    if h.ncols() != d {
        return Err(LieError::DimensionMismatch { expected: d, got: h.ncols() });
    }
    if h.nrows() != innovation.len() || n.nrows() != innovation.len() {
        return Err(LieError::DimensionMismatch { expected: h.nrows(), got: innovation.len() });
    }
    let pht = cov * h.transpose();
    let s = symmetrize(&(h * &pht + n));
    let chol = s.cholesky().ok_or(LieError::Singular("innovation covariance".into()))?;
    let mahalanobis = innovation.dot(&chol.solve(innovation));
    if let Some(gate) = opts.gate {
        if mahalanobis > gate {
            return Err(LieError::MeasurementRejected {
                distance: mahalanobis.to_f64_lossy(),
                threshold: gate.to_f64_lossy(),
            });
        }
    }
    let k = chol.solve(&pht.transpose()).transpose();
    let step = &k * innovation;
    let post = if opts.joseph {
        let ikh = DMatrix::identity(d, d) - &k * h;
        &ikh * cov * ikh.transpose() + &k * n * k.transpose()
    } else {
        // (I - K H) P without forming the d x d product
        cov - &k * pht.transpose()
    };
    Ok(Correction { step, cov: symmetrize(&post), mahalanobis })
}

/// `P+ = F P F^T + G Q G^T`.
pub fn propagate_covariance<T: Real>(
    cov: &DMatrix<T>,
    f: &DMatrix<T>,
    g: &DMatrix<T>,
    q: &DMatrix<T>,
) -> DMatrix<T> {
    symmetrize(&(f * cov * f.transpose() + g * q * g.transpose()))
}

fn check_jacobian<T: Real>(j: &DMatrix<T>, d: usize) -> Result<()> {
    if j.nrows() != d || j.ncols() != d {
        return Err(LieError::DimensionMismatch { expected: d, got: j.nrows() });
    }
    Ok(())
}

/// Local-error prediction (`X = X_hat exp(eps)`):
/// `F = Adj(exp(-Omega)) + J_r(Omega) F_frak`, `P+ = F P F^T + J_r Q J_r^T`.
pub fn dlgekf_predict<T: Real, M: MotionModel<T>>(b: &Belief<T>, model: &M, u: &M::Input) -> Result<Belief<T>> {
    let tag = b.mean.tag();
    let omega = model.omega(&b.mean, u)?;
    let frak = model.jacobian(&b.mean, u)?;
    check_jacobian(&frak, tag.dim())?;
    let q = model.noise(&b.mean, u)?;
    let jr = tag.right_jacobian(&omega)?;
    let adj = tag.adjoint(&tag.exp(&-&omega)?)?;
    let f = adj + &jr * frak;
    Ok(Belief { mean: model.propagate(&b.mean, u)?, cov: propagate_covariance(&b.cov, &f, &jr, &q) })
}

/// Local-error update: `X+ = X_hat exp(m)`, `P+ = J_r(m) (I - K H) P J_r(m)^T`.
pub fn dlgekf_update<T: Real, H: MeasurementModel<T>>(
    b: &Belief<T>,
    model: &H,
    z: &GroupElement<T>,
    opts: &UpdateOptions<T>,
) -> Result<Belief<T>> {
    let innovation = model.predict(&b.mean)?.inverse().compose(z)?.logvee()?;
    let c = kalman_correction(&b.cov, &model.jacobian(&b.mean)?, &model.noise(&b.mean)?, &innovation, opts)?;
    let jr = b.mean.tag().right_jacobian(&c.step)?;
    Ok(Belief { mean: b.mean.oplus_right(&c.step)?, cov: symmetrize(&(&jr * c.cov * jr.transpose())) })
}

/// Global-error prediction (`X = exp(eps) X_hat`):
/// `F = I + Adj(X_hat) J_l(Omega) F_frak`, noise lifted by `Adj(X_hat) J_l(Omega)`.
pub fn dlgekf_rie_predict<T: Real, M: MotionModel<T>>(b: &Belief<T>, model: &M, u: &M::Input) -> Result<Belief<T>> {
    let tag = b.mean.tag();
    let d = tag.dim();
    let omega = model.omega(&b.mean, u)?;
    let frak = model.jacobian(&b.mean, u)?;
    check_jacobian(&frak, d)?;
    let q = model.noise(&b.mean, u)?;
    let g = b.mean.adjoint() * tag.left_jacobian(&omega)?;
    let f = DMatrix::identity(d, d) + &g * frak;
    Ok(Belief { mean: model.propagate(&b.mean, u)?, cov: propagate_covariance(&b.cov, &f, &g, &q) })
}

/// Global-error update: `X+ = exp(m) X_hat`, `P+ = J_l(m) (I - K H) P J_l(m)^T`.
pub fn dlgekf_rie_update<T: Real, H: MeasurementModel<T>>(
    b: &Belief<T>,
    model: &H,
    z: &GroupElement<T>,
    opts: &UpdateOptions<T>,
) -> Result<Belief<T>> {
    let innovation = model.predict(&b.mean)?.inverse().compose(z)?.logvee()?;
    let c = kalman_correction(&b.cov, &model.jacobian(&b.mean)?, &model.noise(&b.mean)?, &innovation, opts)?;
    let jl = b.mean.tag().left_jacobian(&c.step)?;
    Ok(Belief { mean: b.mean.oplus_left(&c.step)?, cov: symmetrize(&(&jl * c.cov * jl.transpose())) })
}

/// Invariant-EKF propagation with a known new mean:
/// `P+ = (I + A dt) P (I + A dt)^T + Q_hat dt`.
pub fn invekf_propagate<T: Real>(
    b: &Belief<T>,
    new_mean: GroupElement<T>,
    a: &DMatrix<T>,
    q_hat: &DMatrix<T>,
    dt: T,
) -> Result<Belief<T>> {
    let d = b.cov.nrows();
    check_jacobian(a, d)?;
    check_jacobian(q_hat, d)?;
    if new_mean.tag() != b.mean.tag() {
        return Err(LieError::InvalidArgument("propagated mean changed group".into()));
    }
    let phi = DMatrix::identity(d, d) + a * dt;
    let cov = symmetrize(&(&phi * &b.cov * phi.transpose() + q_hat * dt));
    Ok(Belief { mean: new_mean, cov })
}

/// Which side the observation is invariant on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariance {
    /// `z = X^-1 b + noise`, innovation `Pi (X_hat z - b)`, `X+ = exp(K y) X_hat`.
    Right,
    /// `z = X b + noise`, innovation `Pi (X_hat^-1 z - b)`, `X+ = X_hat exp(K y)`.
    Left,
}

/// Invariant observation in homogeneous coordinates of the state matrix.
#[derive(Debug, Clone)]
pub struct InvariantObservation<T: Real> {
    pub invariance: Invariance,
    pub z: DVector<T>,
    pub b: DVector<T>,
    /// Selects the informative rows of `X_hat z - b`.
    pub pi: DMatrix<T>,
    /// Linearisation `y ~ H xi` with `X = exp(xi) X_hat` (right) or
    /// `X = X_hat exp(xi)` (left); equivalently `y ~ -H eps` for the
    /// invariant error `exp(eps) = X_hat X^-1` (or `X^-1 X_hat`).
    pub h: DMatrix<T>,
    /// Noise covariance of the reduced innovation.
    pub n: DMatrix<T>,
}

/// Invariant-EKF update, `P+ = (I - K H) P` (Joseph form optional).
pub fn invekf_update<T: Real>(b: &Belief<T>, obs: &InvariantObservation<T>, opts: &UpdateOptions<T>) -> Result<Belief<T>> {
    let size = b.mean.tag().matrix_size();
    if obs.z.len() != size || obs.b.len() != size {
        return Err(LieError::DimensionMismatch { expected: size, got: obs.z.len() });
    }
    let lifted = match obs.invariance {
        Invariance::Right => b.mean.matrix() * &obs.z,
        Invariance::Left => b.mean.inverse().matrix() * &obs.z,
    };
    let y = &obs.pi * (lifted - &obs.b);
    let c = kalman_correction(&b.cov, &obs.h, &obs.n, &y, opts)?;
    let mean = match obs.invariance {
        Invariance::Right => b.mean.oplus_left(&c.step)?,
        Invariance::Left => b.mean.oplus_right(&c.step)?,
    };
    Ok(Belief { mean, cov: c.cov })
}
