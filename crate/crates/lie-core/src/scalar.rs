use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the group and filter code is written against.
///
/// Only `RealField` methods are used for arithmetic so that `f32` and `f64`
/// behave identically; the num-traits bounds cover literal construction and
/// conversion into error payloads.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal. Panics only for types that cannot represent
    /// finite doubles, which excludes every type this crate is used with.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
