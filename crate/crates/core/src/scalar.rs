//! Numeric backend for every welfare, utility and probability in the crate.
//!
//! All analysis code is written against [`Scalar`], so the same routines run
//! on exact rationals (the default, see [`crate::Rational`]) and on floats for
//! quick exploratory work. Equilibrium membership is decided by weak
//! inequalities, so only the exact backends give trustworthy equilibrium
//! sets; floats are accepted but their results inherit rounding.

use std::fmt::{Debug, Display};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field used for values, probabilities and utility tables.
pub trait Scalar:
    Num + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Smallest integral value not less than `self`.
    fn ceil(&self) -> Self;

    /// Builds `numer / denom`.
    ///
    /// Panics if `denom == 0`.
    fn from_fraction(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Self::from_i64(numer).expect("integer conversion") / Self::from_i64(denom).expect("integer conversion")
    }

    fn from_count(n: usize) -> Self {
        Self::from_u64(n as u64).expect("integer conversion")
    }

    /// Lossy conversion used only for display and decimal report columns.
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_negative_value(&self) -> bool {
        *self < Self::zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn ceil(&self) -> Self {
        f64::ceil(*self)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn ceil(&self) -> Self {
        f32::ceil(*self)
    }
}

impl<T> Scalar for Ratio<T>
where
    T: Clone + Integer + Signed + Debug + Display + Send + Sync + 'static,
    Ratio<T>: FromPrimitive + ToPrimitive,
{
    const EXACT: bool = true;

    fn ceil(&self) -> Self {
        Ratio::ceil(self)
    }
}

/// Sum of a slice of scalars, left to right.
pub fn sum<S: Scalar>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |acc, x| acc + x.clone())
}

/// Exact factorial `n!` in the scalar type.
pub(crate) fn factorial<S: Scalar>(n: usize) -> S {
    (1..=n).fold(S::one(), |acc, k| acc * S::from_count(k))
}
