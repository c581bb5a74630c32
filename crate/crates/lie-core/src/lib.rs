//! Lie group machinery for state estimation on matrix Lie groups.
//!
//! Everything is generic over [`Real`]; the `*64`/`*32` aliases below fix the
//! scalar for the common cases.

pub mod averaging;
pub mod error;
pub mod filtercore;
pub mod groups;
pub mod scalar;
pub mod uncertainty;

pub use error::{LieError, Result};
pub use groups::{GroupElement, GroupTag, Pose, TangentVector};
pub use scalar::Real;

pub type GroupElement64 = GroupElement<f64>;
pub type TangentVector64 = TangentVector<f64>;
pub type Pose64 = Pose<f64>;
pub type Belief64 = filtercore::Belief<f64>;
pub type GaussianOnGroup64 = uncertainty::GaussianOnGroup<f64>;

pub type GroupElement32 = GroupElement<f32>;
pub type TangentVector32 = TangentVector<f32>;
pub type Pose32 = Pose<f32>;
pub type Belief32 = filtercore::Belief<f32>;
pub type GaussianOnGroup32 = uncertainty::GaussianOnGroup<f32>;
