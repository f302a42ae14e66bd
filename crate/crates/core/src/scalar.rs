//! Scalar abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout: `f32` or `f64`.
///
/// A whole call chain runs in one precision; conversions happen only at
/// explicit `cast` boundaries.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// Short tag, `"binary32"` or `"binary64"`.
    const NAME: &'static str;

    /// Round an `f64` constant into this precision.
    fn of(x: f64) -> Self;

    fn to_f64_exact(self) -> f64;

    /// Convert between precisions (rounds to nearest when narrowing).
    fn cast<U: Real>(self) -> U {
        U::of(self.to_f64_exact())
    }
}

impl Real for f32 {
    const NAME: &'static str = "binary32";

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_exact(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const NAME: &'static str = "binary64";

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_exact(self) -> f64 {
        self
    }
}

/// Unit roundoff `ε/2` of the precision.
pub fn unit_roundoff<T: Real>() -> T {
    T::epsilon() / T::of(2.0)
}
