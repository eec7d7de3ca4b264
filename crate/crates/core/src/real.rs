//! Scalar arithmetic used throughout the crate.
//!
//! Everything numeric is generic over [`Real`], which is implemented for
//! `f64` (standard binary64) and for [`Extended`], a 192-bit binary float
//! (about 57 significant decimal digits, unbounded exponent).
//!
//! Long products of deformed numbers and structure-function powers leave the
//! binary64 exponent range long before they lose relative accuracy, so products
//! are accumulated in a [`Wide`] value that carries an extra binary exponent.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_float::round::mode::HalfEven;
use dashu_float::{DBig, FBig};
use serde::{Deserialize, Serialize};

/// Working precision of an algebra and everything evaluated from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionMode {
    Standard,
    Extended,
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionMode::Standard => f.write_str("standard"),
            PrecisionMode::Extended => f.write_str("extended"),
        }
    }
}

impl FromStr for PrecisionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" | "standard-binary64" => Ok(PrecisionMode::Standard),
            "extended" => Ok(PrecisionMode::Extended),
            other => Err(format!("unknown precision mode `{other}`")),
        }
    }
}

pub trait Real:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: PrecisionMode;

    /// Relative rounding unit of the representation.
    const EPSILON: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn parse_decimal(s: &str) -> Option<Self>;
    /// Decimal representation that parses back to the same value.
    fn to_repr(&self) -> String;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }

    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn powf(&self, exponent: f64) -> Self;

    /// Splits `self` into a mantissa and a binary exponent with
    /// `self == mantissa * 2^exponent`. Types without a bounded exponent may
    /// return `(self, 0)`.
    fn frexp(&self) -> (Self, i64);
    fn ldexp(&self, exponent: i64) -> Self;

    fn powi(&self, n: i64) -> Self {
        if n < 0 {
            return Self::one() / self.powi(-n);
        }
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Real for f64 {
    const MODE: PrecisionMode = PrecisionMode::Standard;
    const EPSILON: f64 = f64::EPSILON;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn to_repr(&self) -> String {
        format!("{self:?}")
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn powf(&self, exponent: f64) -> Self {
        f64::powf(*self, exponent)
    }
    fn powi(&self, n: i64) -> Self {
        match i32::try_from(n) {
            Ok(n) => f64::powi(*self, n),
            Err(_) => f64::powf(*self, n as f64),
        }
    }
    fn frexp(&self) -> (Self, i64) {
        frexp_f64(*self)
    }
    fn ldexp(&self, exponent: i64) -> Self {
        ldexp_f64(*self, exponent)
    }
}

fn frexp_f64(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = frexp_f64(x * f64::from_bits(0x4350_0000_0000_0000)); // 2^54
        return (m, e - 54);
    }
    let exponent = raw - 1022;
    let mantissa = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (mantissa, exponent)
}

fn ldexp_f64(mut x: f64, mut e: i64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Binary precision of [`Extended`] values.
pub const EXTENDED_BITS: usize = 192;
/// Enough for most values; [`Extended::to_repr`] widens up to 62 digits
/// until the string parses back to the same value.
const EXTENDED_DECIMAL_DIGITS: usize = 58;

type Big = FBig<HalfEven, 2>;

/// 192-bit binary floating point value.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Extended(Big);

impl Extended {
    fn wrap(x: Big) -> Self {
        Extended(x.with_precision(EXTENDED_BITS).value())
    }
}

impl fmt::Debug for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_repr())
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_repr())
    }
}

macro_rules! extended_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Extended {
            type Output = Extended;
            fn $method(self, rhs: Extended) -> Extended {
                Extended::wrap($tr::$method(self.0, rhs.0))
            }
        }
    };
}

extended_binop!(Add, add);
extended_binop!(Sub, sub);
extended_binop!(Mul, mul);
extended_binop!(Div, div);

impl Neg for Extended {
    type Output = Extended;
    fn neg(self) -> Extended {
        Extended(-self.0)
    }
}

impl Real for Extended {
    const MODE: PrecisionMode = PrecisionMode::Extended;
    const EPSILON: f64 = 1.6e-57; // 2^-189, leaves a few guard bits

    fn from_f64(x: f64) -> Self {
        let big = Big::try_from(x).unwrap_or(Big::ZERO);
        Extended::wrap(big)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let dec = DBig::from_str(s.trim()).ok()?;
        let bin = dec
            .with_base_and_precision::<2>(EXTENDED_BITS)
            .value()
            .with_rounding::<HalfEven>();
        Some(Extended::wrap(bin))
    }
    fn to_repr(&self) -> String {
        if self.0 == Big::ZERO {
            return "0".to_string();
        }
        let at = |digits: usize| {
            self.0
                .clone()
                .with_base_and_precision::<10>(digits)
                .value()
                .to_string()
        };
        (EXTENDED_DECIMAL_DIGITS..62)
            .map(at)
            .find(|s| Extended::parse_decimal(s).as_ref() == Some(self))
            .unwrap_or_else(|| at(62))
    }
    fn abs(&self) -> Self {
        if self.0 < Big::ZERO {
            Extended(-self.0.clone())
        } else {
            self.clone()
        }
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn powf(&self, exponent: f64) -> Self {
        if exponent == exponent.trunc() && exponent.abs() < 1e15 {
            return self.powi(exponent as i64);
        }
        let e = Extended::from_f64(exponent);
        Extended::wrap((self.0.ln() * e.0).exp())
    }
    fn frexp(&self) -> (Self, i64) {
        (self.clone(), 0)
    }
    fn ldexp(&self, exponent: i64) -> Self {
        if exponent == 0 {
            return self.clone();
        }
        self.clone() * Extended::from_f64(2.0).powi(exponent)
    }
}

/// A value of `T` carrying an additional binary exponent, so products of
/// many factors neither overflow nor flush to zero before they are combined.
#[derive(Clone, Debug)]
pub struct Wide<T> {
    mantissa: T,
    exponent: i64,
}

impl<T: Real> Wide<T> {
    pub fn one() -> Self {
        Wide {
            mantissa: T::one(),
            exponent: 0,
        }
    }

    pub fn zero() -> Self {
        Wide {
            mantissa: T::zero(),
            exponent: 0,
        }
    }

    pub fn from_value(x: T) -> Self {
        let (mantissa, exponent) = x.frexp();
        Wide { mantissa, exponent }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.is_finite()
    }

    fn normalize(mut self) -> Self {
        let (m, e) = self.mantissa.frexp();
        self.mantissa = m;
        self.exponent += e;
        self
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: &Wide<T>) -> Self {
        Wide {
            mantissa: self.mantissa * rhs.mantissa.clone(),
            exponent: self.exponent + rhs.exponent,
        }
        .normalize()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, rhs: &Wide<T>) -> Self {
        Wide {
            mantissa: self.mantissa / rhs.mantissa.clone(),
            exponent: self.exponent - rhs.exponent,
        }
        .normalize()
    }

    pub fn mul_value(self, x: T) -> Self {
        self.mul(&Wide::from_value(x))
    }

    pub fn div_value(self, x: T) -> Self {
        self.div(&Wide::from_value(x))
    }

    /// `base^n` with exponent tracking at every squaring.
    pub fn pow(base: &T, n: i64) -> Self {
        if n < 0 {
            return Wide::one().div(&Wide::pow(base, -n));
        }
        let mut b = Wide::from_value(base.clone());
        let mut acc = Wide::one();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.clone().mul(&b);
            }
        }
        acc
    }

    pub fn mul_pow(self, base: &T, n: i64) -> Self {
        if n == 0 {
            return self;
        }
        self.mul(&Wide::pow(base, n))
    }

    pub fn value(&self) -> T {
        self.mantissa.ldexp(self.exponent)
    }

    /// Ordering by magnitude, usable when `value()` would overflow.
    pub fn cmp_magnitude(&self, other: &Wide<T>) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let a = Wide::from_value(self.mantissa.abs());
        let b = Wide::from_value(other.mantissa.abs());
        let ea = a.exponent + self.exponent;
        let eb = b.exponent + other.exponent;
        match ea.cmp(&eb) {
            Ordering::Equal => a
                .mantissa
                .partial_cmp(&b.mantissa)
                .unwrap_or(Ordering::Equal),
            o => o,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        CompensatedSum {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum.clone() + x.clone();
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation.clone() + ((self.sum.clone() - t.clone()) + x);
        } else {
            self.compensation = self.compensation.clone() + ((x - t.clone()) + self.sum.clone());
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum.clone() + self.compensation.clone()
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `n choose 2` for signed `n`; the polynomial form `n(n-1)/2` is kept for
/// negative arguments.
pub fn choose2(n: i64) -> i64 {
    n * (n - 1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frexp_roundtrip() {
        for &x in &[1.0, 0.75, -3.5, 1e-310, 6.02e23, f64::MIN_POSITIVE] {
            let (m, e) = frexp_f64(x);
            assert!((0.5..1.0).contains(&m.abs()), "{x}: {m}");
            assert_eq!(ldexp_f64(m, e), x);
        }
    }

    #[test]
    fn wide_power_survives_underflow() {
        let w = Wide::pow(&0.9f64, 20_000);
        assert!(w.value() == 0.0);
        let back = w.mul(&Wide::pow(&(1.0 / 0.9f64), 20_000)).value();
        assert!((back - 1.0).abs() < 1e-11, "{back}");
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-16).abs() < 1e-30);
    }

    #[test]
    fn extended_has_more_digits() {
        let third = Extended::one() / Extended::from_f64(3.0);
        let back = third * Extended::from_f64(3.0) - Extended::one();
        assert!(back.abs().to_f64() < 1e-55);
        let p = Extended::parse_decimal("0.9").unwrap();
        assert!(
            p.to_repr().starts_with("0.8999999999999999999999999999")
                || p.to_repr().starts_with("0.9")
        );
        assert_eq!(Extended::from_f64(0.5).powi(-3).to_f64(), 8.0);
    }

    #[test]
    fn extended_repr_roundtrips() {
        let mut x = Extended::one() / Extended::from_f64(1.495);
        for _ in 0..200 {
            assert_eq!(Extended::parse_decimal(&x.to_repr()).unwrap(), x);
            x = x.clone() * Extended::from_f64(0.37) + Extended::from_f64(1e-3);
        }
        assert_eq!(Extended::parse_decimal("0.3").unwrap().to_repr(), "0.3");
    }

    #[test]
    fn extended_does_not_underflow() {
        let tiny = Extended::from_f64(0.5).powi(5000);
        assert!(!tiny.is_zero());
        assert_eq!(tiny.to_f64(), 0.0);
    }
}
