//! Scalar abstraction: the whole library is generic over the working
//! floating-point type.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar used for mesh geometry, quadrature and linear
/// algebra: `f32` or `f64`.
pub trait Real: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant to the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Converts a working scalar to `f64` for display and diagnostics.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}
