//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine-precision-aware tolerance used by internal pivoting decisions.
    fn pivot_tolerance() -> Self;

    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn pivot_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn pivot_tolerance() -> Self {
        1e-12
    }
}
