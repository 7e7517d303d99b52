//! Numeric abstraction for the graph operators.
//!
//! Everything in [`crate::graph`], [`crate::influence`] and [`crate::cusum`]
//! is written against [`Scalar`], so the same code runs in `f64` (the
//! production path), `f32`, and exact rational arithmetic ([`Rational64`]).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Real-like number usable as an edge weight or signal value.
pub trait Scalar:
    Num + Copy + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Sum + Send + Sync + 'static
{
    /// Slack accepted when checking that incoming weights sum to one.
    fn normalization_tolerance() -> Self;

    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(self) -> bool;

    fn abs_value(self) -> Self;

    fn max_value_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Exact conversion of a small integer.
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("small integers are representable")
    }

    /// `num / den` built from integers, exact for rational types.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }
}

impl Scalar for f64 {
    fn normalization_tolerance() -> Self {
        1e-12
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn abs_value(self) -> Self {
        self.abs()
    }
}

impl Scalar for f32 {
    fn normalization_tolerance() -> Self {
        1e-5
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn abs_value(self) -> Self {
        self.abs()
    }
}

impl Scalar for Rational64 {
    fn normalization_tolerance() -> Self {
        Rational64::from_integer(0)
    }

    fn is_finite_value(self) -> bool {
        true
    }

    fn abs_value(self) -> Self {
        self.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_ratio_is_exact() {
        let third = Rational64::ratio(1, 3);
        assert_eq!(third * Rational64::from_int(3), Rational64::from_int(1));
    }

    #[test]
    fn float_finiteness() {
        assert!(1.0f64.is_finite_value());
        assert!(!f64::NAN.is_finite_value());
        assert!(!f32::INFINITY.is_finite_value());
    }
}
