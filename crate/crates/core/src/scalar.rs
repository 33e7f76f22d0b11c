//! Numeric abstraction for probabilities and scores.
//!
//! Everything that aggregates probability mass (distributions, `resp`,
//! Shapley values, naive-Bayes scoring) is generic over [`Scalar`]. The
//! crate root exposes `f64` aliases; [`BigRational`] gives exact arithmetic
//! for oracles and reproducibility checks.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive, Zero};

/// A real-like field used for probability and score arithmetic.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Exact `num / den` where the type allows it.
    fn from_ratio(num: u64, den: u64) -> Self;

    /// Parses a plain decimal literal (`0.25`, `1`, `.5` is rejected).
    fn parse_decimal(text: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `|self - other| <= tol`, measured in `f64`.
    fn within(&self, other: &Self, tol: f64) -> bool {
        let diff = if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        };
        diff.to_f64_lossy() <= tol
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
}

fn decimal_parts(text: &str) -> Option<(&str, &str)> {
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if text.contains('.') && (frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    Some((int, frac))
}

macro_rules! impl_float_scalar {
    ($($t:ty),*) => {
        $(
            impl Scalar for $t {
                #[inline]
                fn from_ratio(num: u64, den: u64) -> Self {
                    (num as f64 / den as f64) as $t
                }

                fn parse_decimal(text: &str) -> Option<Self> {
                    decimal_parts(text)?;
                    text.parse::<$t>().ok()
                }
            }
        )*
    };
}

impl_float_scalar!(f32, f64);

impl Scalar for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_decimal(text: &str) -> Option<Self> {
        let (int, frac) = decimal_parts(text)?;
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        Some(BigRational::new(digits, den))
    }

    fn to_f64_lossy(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.to_f64().unwrap_or(f64::NAN)
    }
}
