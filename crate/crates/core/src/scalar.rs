//! Floating-point scalar abstraction.
//!
//! The numeric pipeline (encoder, float network, spiking engine) is generic
//! over [`Scalar`] so the same code runs in f32 for the production path (the
//! on-disk weight format is 32-bit) and in f64 where precision matters, e.g.
//! finite-difference gradient checks. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for converting an f64 constant into `Self`.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts to scalar")
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($($t:ty)*) => ($( impl Scalar for $t {} )*)
}

impl_scalar!(f32 f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_between_f64_and_scalar() {
        assert_eq!(f32::of(0.5).as_f64(), 0.5);
        assert_eq!(f64::of(-3.25), -3.25);
    }

    fn generic_sum<S: Scalar>(xs: &[S]) -> S {
        xs.iter().copied().sum()
    }

    #[test]
    fn works_through_a_generic_fn() {
        assert_eq!(generic_sum(&[1.0f32, 2.0, 3.0]), 6.0);
        assert_eq!(generic_sum(&[1.0f64, 2.0, 3.0]), 6.0);
    }
}
