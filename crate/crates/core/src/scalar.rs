//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the path calculus is generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute tolerance under which two times are considered equal.
    const TIME_TOL: f64;

    /// Converts an `f64` literal. Panics only if the target cannot hold it at all.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable")
    }

    #[inline]
    fn time_tol() -> Self {
        Self::lit(Self::TIME_TOL)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Positive part `max(x, 0)`.
    #[inline]
    fn pos(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f64 {
    const TIME_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const TIME_TOL: f64 = 1e-6;
}

#[inline]
pub(crate) fn same_time<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::time_tol()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_part() {
        assert_eq!((-1.5f64).pos(), 0.0);
        assert_eq!(2.0f32.pos(), 2.0);
    }

    #[test]
    fn time_equality_uses_tolerance() {
        assert!(same_time(0.5f64, 0.5 + 1e-13));
        assert!(!same_time(0.5f64, 0.5 + 1e-9));
        assert!(same_time(0.5f32, 0.5 + 1e-7));
    }
}
