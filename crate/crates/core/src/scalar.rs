//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar type the engine computes with (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy view as `f64`, used for tags, reporting and formatting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Machine epsilon of `T` relative to that of `f64` (1 for `f64`).
pub fn precision_ratio<T: Real>() -> f64 {
    T::epsilon().as_f64() / f64::EPSILON
}

/// A step or tolerance tuned for `f64`, rescaled by `precision_ratio^power`
/// for coarser types. Central differences want `power = 1/3`, nested or
/// mixed ones `1/4`, one-sided ones `1/2`.
pub fn scaled<T: Real>(f64_value: f64, power: f64) -> T {
    lit(f64_value * precision_ratio::<T>().powf(power))
}

/// Largest absolute entry of `a - b`. Slices must have equal length.
pub fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Largest absolute entry.
pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}
