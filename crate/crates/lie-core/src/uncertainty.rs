//! Concentrated Gaussians on groups and covariance transport between
//! left and right perturbations.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{LieError, Result};
use crate::groups::GroupElement;
use crate::scalar::Real;

/// Where the perturbation is applied to the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `X = mean * exp(eps)`.
    LocalRight,
    /// `X = exp(eps) * mean`.
    GlobalLeft,
}

/// Direction of [`transport_covariance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    /// Global (right-invariant error) covariance to local (left-invariant):
    /// `P_L = Adj(X^-1) P_R Adj(X^-1)^T`.
    RightToLeft,
    /// `P_R = Adj(X) P_L Adj(X)^T`.
    LeftToRight,
}

/// Concentrated Gaussian `N(mean, cov)` on a matrix Lie group.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOnGroup<T: Real> {
    pub mean: GroupElement<T>,
    pub cov: DMatrix<T>,
    pub side: Side,
}

/// Checks symmetry (relative 1e-9) and positive semidefiniteness.
pub fn check_covariance<T: Real>(cov: &DMatrix<T>, dim: usize) -> Result<()> {
    if cov.nrows() != dim || cov.ncols() != dim {
        return Err(LieError::DimensionMismatch { expected: dim, got: cov.nrows() });
    }
    let scale = T::one() + cov.amax();
    let tol = T::lit(1e-9).max(T::default_epsilon() * T::lit(1e3)) * scale;
    if (cov - cov.transpose()).amax() > tol {
        return Err(LieError::InvalidCovariance("not symmetric".into()));
    }
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.min() < -tol {
        return Err(LieError::InvalidCovariance(format!(
            "negative eigenvalue {}",
            eig.eigenvalues.min().to_f64_lossy()
        )));
    }
    Ok(())
}

/// A square-root factor `L` with `L L^T = cov`.
///
/// Cholesky when the matrix is positive definite; otherwise the eigen-factor
/// with negative round-off eigenvalues clamped to zero, so singular and zero
/// covariances are handled exactly.
pub fn covariance_factor<T: Real>(cov: &DMatrix<T>) -> DMatrix<T> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    let eig = cov.clone().symmetric_eigen();
    let sqrt = eig.eigenvalues.map(|l| l.max(T::zero()).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
}

impl<T: Real> GaussianOnGroup<T> {
    pub fn new(mean: GroupElement<T>, cov: DMatrix<T>, side: Side) -> Result<Self> {
        check_covariance(&cov, mean.tag().dim())?;
        Ok(Self { mean, cov, side })
    }

    /// Applies a tangent perturbation on the configured side.
    pub fn perturb(&self, eps: &DVector<T>) -> Result<GroupElement<T>> {
        match self.side {
            Side::LocalRight => self.mean.oplus_right(eps),
            Side::GlobalLeft => self.mean.oplus_left(eps),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<GroupElement<T>>> {
        let l = covariance_factor(&self.cov);
        let d = self.cov.nrows();
        (0..n)
            .map(|_| {
                let z = DVector::from_fn(d, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
                self.perturb(&(&l * z))
            })
            .collect()
    }

    /// Reproducible sampling from a ChaCha8 stream.
    pub fn sample_seeded(&self, n: usize, seed: u64) -> Result<Vec<GroupElement<T>>> {
        self.sample(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Same distribution expressed with the other perturbation side.
    pub fn switch_side(&self) -> Self {
        let (dir, side) = match self.side {
            Side::GlobalLeft => (Transport::RightToLeft, Side::LocalRight),
            Side::LocalRight => (Transport::LeftToRight, Side::GlobalLeft),
        };
        Self { mean: self.mean.clone(), cov: transport_covariance(&self.cov, &self.mean, dir), side }
    }
}

pub fn transport_covariance<T: Real>(cov: &DMatrix<T>, at: &GroupElement<T>, dir: Transport) -> DMatrix<T> {
    let a = match dir {
        Transport::RightToLeft => at.inverse().adjoint(),
        Transport::LeftToRight => at.adjoint(),
    };
    let out = &a * cov * a.transpose();
    symmetrize(&out)
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}
