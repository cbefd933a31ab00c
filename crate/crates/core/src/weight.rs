//! Probability arithmetic. Distributions are generic over [`Weight`] so the
//! same code runs on exact rationals or on doubles with compensated sums.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Arithmetic mode selector used by front ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Rational,
    Float,
}

/// Supports above this many classes default to float mode.
pub const RATIONAL_SUPPORT_LIMIT: usize = 10_000;

/// Tolerance for equality tests in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

pub trait Weight: Clone + PartialEq + PartialOrd + Debug + Send + Sync + 'static {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: u64, den: u64) -> Self;
    /// Exact conversion for rationals (binary expansion of the double).
    fn from_f64(x: f64) -> Option<Self>;
    fn from_rational(r: &Rational) -> Self;
    fn to_rational(&self) -> Rational;
    fn to_f64(&self) -> f64;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn abs(&self) -> Self;

    fn mul_u64(&self, k: u64) -> Self {
        self.mul(&Self::from_ratio(k, 1))
    }

    fn div_u64(&self, k: u64) -> Self {
        self.div(&Self::from_ratio(k, 1))
    }

    /// Sum of an iterator; compensated in float mode.
    fn sum<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), |a, b| a.add(&b))
    }

    /// Equality up to [`FLOAT_TOLERANCE`] in float mode; exact otherwise.
    fn approx_eq(&self, other: &Self) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.to_f64() - other.to_f64()).abs() <= FLOAT_TOLERANCE
        }
    }

    fn render(&self) -> String;
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn to_rational(&self) -> Rational {
        BigRational::from_float(*self).unwrap_or_else(Zero::zero)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sum<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        kahan_sum(iter)
    }
    fn render(&self) -> String {
        format!("{self:e}")
    }
}

impl Weight for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

/// Converts a big rational to the nearest representable double, tolerating
/// numerators and denominators beyond the f64 range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        r.numer() / (r.denom() << (shift as usize))
    } else {
        (r.numer() << ((-shift) as usize)) / r.denom()
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
}

/// Kahan-compensated sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in iter {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Parses `"num/den"`, an integer, or a decimal float into a weight.
pub fn parse_weight<W: Weight>(s: &str) -> Option<W> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(W::from_rational(&BigRational::new(n, d)));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(W::from_rational(&BigRational::from_integer(n)));
    }
    let x: f64 = s.parse().ok()?;
    if W::EXACT {
        decimal_to_rational(s).map(|r| W::from_rational(&r))
    } else {
        W::from_f64(x)
    }
}

/// Reads a decimal literal such as `0.125` or `2.5e-3` as an exact rational.
fn decimal_to_rational(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Natural log of k! for small k via an exact running sum, lgamma beyond.
pub fn ln_factorial(k: u64) -> f64 {
    const TABLE_LEN: usize = 1024;
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..TABLE_LEN {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    if (k as usize) < TABLE_LEN {
        table[k as usize]
    } else {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }
}

/// Natural log of (2k-1)!! for even `s = 2k`; zero for `s = 0`.
pub fn ln_double_factorial_odd(s: u64) -> f64 {
    debug_assert!(s % 2 == 0);
    let k = s / 2;
    ln_factorial(s) - ln_factorial(k) - k as f64 * std::f64::consts::LN_2
}
