//! Matrix Lie groups: SO(3), SE(3), SE_k(3), T(n) and their products.

mod element;
mod pose;
pub mod so3;
mod tag;

pub use element::{GroupElement, TangentVector};
pub use pose::Pose;
pub use so3::{rotation_to_rpy, rpy_to_rotation, skew, unskew};
pub use tag::{sek_trans_offset, structural_tol, GroupTag, SEK_ROT_OFFSET};
