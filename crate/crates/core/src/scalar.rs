//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Default + Send + Sync + 'static
{
    /// Relative tolerance the iterative solvers aim for with this precision.
    fn solver_tolerance() -> Self;
}

impl Scalar for f32 {
    fn solver_tolerance() -> Self {
        2e-6
    }
}

impl Scalar for f64 {
    fn solver_tolerance() -> Self {
        1e-12
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite literal")
}

#[inline]
pub(crate) fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Euclidean norm of a plane vector.
#[inline]
pub fn norm2<T: Scalar>(v: [T; 2]) -> T {
    v[0].hypot(v[1])
}

#[inline]
pub fn dot2<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}
