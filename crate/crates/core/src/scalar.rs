//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the models are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into `(-π, π]`.
///
/// Values already inside the interval are returned untouched, so small
/// differences keep their exact bit pattern.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let pi = T::PI();
    if angle > -pi && angle <= pi {
        return angle;
    }
    let two_pi = T::TAU();
    let mut r = angle - two_pi * ((angle - pi) / two_pi).ceil();
    // rounding in the reduction can land a hair outside the interval
    if r <= -pi {
        r = r + two_pi;
    }
    if r > pi {
        r = r - two_pi;
    }
    r
}
