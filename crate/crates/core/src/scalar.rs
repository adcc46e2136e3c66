//! Weight scalars.
//!
//! Measures, costs and correlation sums are generic over [`Scalar`], so the
//! same code runs on exact rationals (the default everywhere the results are
//! asserted as identities) and on binary floats.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Lossless text form: `"num/den"` for rationals, shortest round-trip
    /// decimal for floats.
    fn render(&self) -> String;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("i64 fits") / Self::from_i64(den).expect("i64 fits")
    }
}

impl Scalar for f64 {
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for f32 {
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for BigRational {
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

impl Scalar for Ratio<i64> {
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

/// Exact rational from two counts.
pub fn ratio_of(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"`, `"p"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(num, den);
        return Some(if neg { -r } else { r });
    }
    t.parse::<BigInt>().ok().map(BigRational::from_integer)
}
