//! Scalar abstraction: every numerical routine in this crate is generic over
//! [`FloatT`], instantiated as `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

/// Floating-point scalar used throughout the solvers.
pub trait FloatT:
    num_traits::Float
    + num_traits::NumAssignOps
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + FromStr
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl FloatT for f32 {}
impl FloatT for f64 {}

/// Shorthand for lifting an `f64` literal into the generic scalar type.
#[inline]
pub fn fl<T: FloatT>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in FloatT")
}
