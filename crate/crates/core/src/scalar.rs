//! Generic floating-point scalar used throughout the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Scalar type for all numerical routines: `f32` or `f64`.
pub trait Scalar: Float + NumAssign + Sum + Debug + Display + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert an `f64` literal into the generic scalar type.
///
/// Constants (tolerances, radius factors, sampled values) are written as
/// `f64` and narrowed here; every value we use is exactly representable or
/// rounds once, so `f32` instantiations stay consistent with `f64` ones.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from(x).expect("f64 literal representable in scalar type")
}
