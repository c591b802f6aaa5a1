//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type usable throughout the crate (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable")
}

/// Widens `x` to `f64`.
#[inline]
pub fn wide<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite conversion")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(k: usize) -> T {
    T::from_usize(k).expect("usize representable")
}

/// Mean of a slice (zero for an empty slice).
pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / count(xs.len())
}
