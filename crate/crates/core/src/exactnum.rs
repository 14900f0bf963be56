//! Exact dyadic arithmetic and outward-rounded floating intervals.
//!
//! Every measure in this crate is a sum of cylinder masses `2^-n`, so the
//! natural exact number type is the dyadic rational `m * 2^e`. Exponential
//! sums (partition functions, Gibbs ratios) cannot stay exact and are carried
//! as [`RealInterval`]s whose endpoints are widened outward after every
//! operation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Direction, Error};

/// Exact value `mantissa * 2^exponent`, kept canonical: the mantissa is odd,
/// or it is zero and the exponent is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    mantissa: BigInt,
    exponent: i64,
}

impl DyadicRational {
    pub fn new(mantissa: impl Into<BigInt>, exponent: i64) -> Self {
        let mut mantissa = mantissa.into();
        if mantissa.is_zero() {
            return Self::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        let mut exponent = exponent;
        if tz > 0 {
            mantissa >>= tz;
            exponent += tz as i64;
        }
        Self { mantissa, exponent }
    }

    pub fn zero() -> Self {
        Self { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        Self { mantissa: BigInt::one(), exponent: 0 }
    }

    pub fn from_int(value: i64) -> Self {
        Self::new(value, 0)
    }

    /// `2^exponent`.
    pub fn pow2(exponent: i64) -> Self {
        Self { mantissa: BigInt::one(), exponent }
    }

    /// `numerator / 2^shift`.
    pub fn ratio(numerator: i64, shift: u32) -> Self {
        Self::new(numerator, -(shift as i64))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.sign() == Sign::Minus
    }

    pub fn abs(&self) -> Self {
        Self { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    /// Multiply by `2^shift` exactly.
    pub fn scale_pow2(&self, shift: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self { mantissa: self.mantissa.clone(), exponent: self.exponent + shift }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    // Aligns both mantissas to the smaller exponent.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i64) {
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as usize;
        let b = &other.mantissa << (other.exponent - e) as usize;
        (a, b, e)
    }

    /// Nearest `f64`, ties to even.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        // Keep 64 significant bits; the tail only matters for the sticky bit.
        let (m, e) = if bits > 64 {
            let shift = bits - 64;
            let trimmed: BigInt = &self.mantissa >> shift as usize;
            let sticky = (&trimmed << shift as usize) != self.mantissa;
            let mut t = trimmed.to_i128().unwrap_or(0);
            if sticky {
                t |= 1;
            }
            (t, self.exponent + shift)
        } else {
            (self.mantissa.to_i128().unwrap_or(0), self.exponent)
        };
        let base = m as f64;
        scale_f64(base, e)
    }

    /// Largest `f64` that is `<= self`.
    pub fn to_f64_down(&self) -> f64 {
        let x = self.to_f64();
        match Self::from_f64(x) {
            Some(d) if d > *self => next_down(x),
            _ if x.is_infinite() && x > 0.0 => f64::MAX,
            _ => x,
        }
    }

    /// Smallest `f64` that is `>= self`.
    pub fn to_f64_up(&self) -> f64 {
        let x = self.to_f64();
        match Self::from_f64(x) {
            Some(d) if d < *self => next_up(x),
            _ if x.is_infinite() && x < 0.0 => f64::MIN,
            _ => x,
        }
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1i64 << 52), raw_exp - 1075)
        };
        Some(Self::new(sign * m, e))
    }
}

fn scale_f64(base: f64, e: i64) -> f64 {
    // Split large scalings so that intermediate powers stay finite.
    let mut x = base;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
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

impl Default for DyadicRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb {
            return sign_rank(sa).cmp(&sign_rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        // Same sign: compare magnitudes by bit length first, which avoids
        // materializing huge shifts for wildly different exponents.
        let la = self.mantissa.bits() as i64 + self.exponent;
        let lb = other.mantissa.bits() as i64 + other.exponent;
        let mag = if la != lb {
            la.cmp(&lb)
        } else {
            let (a, b, _) = self.abs().aligned(&other.abs());
            a.cmp(&b)
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }
}

fn sign_rank(s: Sign) -> i8 {
    match s {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: &DyadicRational) -> DyadicRational {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a + b, e)
    }
}

impl Add for DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: DyadicRational) -> DyadicRational {
        &self + &rhs
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: &DyadicRational) -> DyadicRational {
        self + &(-rhs)
    }
}

impl Sub for DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: DyadicRational) -> DyadicRational {
        &self - &rhs
    }
}

impl Mul for &DyadicRational {
    type Output = DyadicRational;
    fn mul(self, rhs: &DyadicRational) -> DyadicRational {
        if self.is_zero() || rhs.is_zero() {
            return DyadicRational::zero();
        }
        // Product of odd mantissas is odd, so no renormalization is needed.
        DyadicRational {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Mul for DyadicRational {
    type Output = DyadicRational;
    fn mul(self, rhs: DyadicRational) -> DyadicRational {
        &self * &rhs
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        DyadicRational { mantissa: -&self.mantissa, exponent: self.exponent }
    }
}

impl Neg for DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        -&self
    }
}

impl std::iter::Sum for DyadicRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| &acc + &x)
    }
}

/// Renders as `mantissa*2^exponent`, e.g. `5*2^-5`; integers render bare.
impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}*2^{}", self.mantissa, self.exponent)
        }
    }
}

impl std::str::FromStr for DyadicRational {
    type Err = Error;

    /// Accepts `m`, `m*2^e`, `2^e` and `m/2^k`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a dyadic rational: {s:?}"));
        let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|_| bad());
        let parse_exp = |t: &str| t.trim().parse::<i64>().map_err(|_| bad());
        if let Some((m, e)) = s.split_once("*2^") {
            return Ok(Self::new(parse_int(m)?, parse_exp(e)?));
        }
        if let Some(e) = s.strip_prefix("2^") {
            return Ok(Self::pow2(parse_exp(e)?));
        }
        if let Some((m, d)) = s.split_once("/2^") {
            return Ok(Self::new(parse_int(m)?, -parse_exp(d)?));
        }
        Ok(Self::new(parse_int(s)?, 0))
    }
}

/// Closed interval with exact dyadic endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicInterval {
    lo: DyadicRational,
    hi: DyadicRational,
}

impl DyadicInterval {
    pub fn new(lo: DyadicRational, hi: DyadicRational) -> Result<Self, Error> {
        if lo > hi {
            return Err(Error::InvalidInterval(format!("[{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: DyadicRational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn lo(&self) -> &DyadicRational {
        &self.lo
    }

    pub fn hi(&self) -> &DyadicRational {
        &self.hi
    }

    pub fn width(&self) -> DyadicRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &DyadicRational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn is_subset_of(&self, other: &DyadicInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn overlaps(&self, other: &DyadicInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &DyadicInterval) -> Option<DyadicInterval> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        DyadicInterval::new(lo, hi).ok()
    }

    pub fn add(&self, other: &DyadicInterval) -> DyadicInterval {
        Self { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &DyadicInterval) -> DyadicInterval {
        Self { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn neg(&self) -> DyadicInterval {
        Self { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn mul(&self, other: &DyadicInterval) -> DyadicInterval {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().unwrap_or_default();
        let hi = products.iter().max().cloned().unwrap_or_default();
        Self { lo, hi }
    }

    /// Multiply by an exact scalar.
    pub fn scale(&self, k: &DyadicRational) -> DyadicInterval {
        self.mul(&DyadicInterval::point(k.clone()))
    }

    /// Outward conversion to floating point.
    pub fn to_real(&self) -> RealInterval {
        RealInterval { lo: self.lo.to_f64_down(), hi: self.hi.to_f64_up() }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Number of units in the last place every floating result is widened by.
pub const ULP_SLACK: u32 = 4;

pub fn next_up(x: f64) -> f64 {
    x.next_up()
}

pub fn next_down(x: f64) -> f64 {
    x.next_down()
}

fn widen_down(x: f64) -> f64 {
    (0..ULP_SLACK).fold(x, |acc, _| acc.next_down())
}

fn widen_up(x: f64) -> f64 {
    (0..ULP_SLACK).fold(x, |acc, _| acc.next_up())
}

/// `a + b`, with a flag telling whether the rounded sum is exact (two-sum).
fn sum_exact(a: f64, b: f64) -> (f64, bool) {
    let s = a + b;
    if !s.is_finite() {
        return (s, false);
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err == 0.0)
}

fn add_down(a: f64, b: f64) -> f64 {
    match sum_exact(a, b) {
        (s, true) => s,
        (s, false) => widen_down(s),
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    match sum_exact(a, b) {
        (s, true) => s,
        (s, false) => widen_up(s),
    }
}

/// Floating interval whose endpoints are pushed outward by [`ULP_SLACK`] ulps
/// after every operation, so it always encloses the exact real result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealInterval {
    lo: f64,
    hi: f64,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, Error> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval(format!("[{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate interval. Only exact for values representable in `f64`.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Self::point(0.0)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &RealInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn overlaps(&self, other: &RealInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &RealInterval) -> RealInterval {
        Self { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn add(&self, other: &RealInterval) -> RealInterval {
        Self { lo: add_down(self.lo, other.lo), hi: add_up(self.hi, other.hi) }
    }

    pub fn sub(&self, other: &RealInterval) -> RealInterval {
        Self { lo: add_down(self.lo, -other.hi), hi: add_up(self.hi, -other.lo) }
    }

    pub fn neg(&self) -> RealInterval {
        Self { lo: -self.hi, hi: -self.lo }
    }

    pub fn mul(&self, other: &RealInterval) -> RealInterval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { lo: widen_down(lo), hi: widen_up(hi) }
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, other: &RealInterval) -> Result<RealInterval, Error> {
        if other.contains(0.0) {
            return Err(Error::Domain("division by an interval containing zero".into()));
        }
        let q = [
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        ];
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { lo: widen_down(lo), hi: widen_up(hi) })
    }

    /// Multiply by an exactly representable scalar.
    pub fn scale(&self, k: f64) -> RealInterval {
        self.mul(&RealInterval::point(k))
    }

    pub fn exp(&self) -> Result<RealInterval, Error> {
        outward_exp(self)
    }

    pub fn ln(&self) -> Result<RealInterval, Error> {
        if self.lo <= 0.0 {
            return Err(Error::Domain("logarithm of a non-positive interval".into()));
        }
        Ok(Self { lo: widen_down(self.lo.ln()), hi: widen_up(self.hi.ln()) })
    }

    pub fn sqrt(&self) -> Result<RealInterval, Error> {
        if self.lo < 0.0 {
            return Err(Error::Domain("square root of a negative interval".into()));
        }
        Ok(Self { lo: widen_down(self.lo.sqrt()).max(0.0), hi: widen_up(self.hi.sqrt()) })
    }

    /// Integer power of a non-negative interval, by repeated multiplication.
    pub fn powi(&self, n: u32) -> RealInterval {
        (0..n).fold(RealInterval::point(1.0), |acc, _| acc.mul(self))
    }
}

/// Renders as `[lo,hi]` with 17 significant digits.
impl fmt::Display for RealInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.16e},{:.16e}]", self.lo, self.hi)
    }
}

/// Enclosure of `exp` over `x`.
///
/// The library `exp` is accurate to well under one ulp; each endpoint is
/// widened by [`ULP_SLACK`] ulps. Overflow of the upper endpoint is reported
/// as a range error instead of returning an infinite bound.
pub fn outward_exp(x: &RealInterval) -> Result<RealInterval, Error> {
    if !x.lo.is_finite() || !x.hi.is_finite() {
        return Err(Error::Domain("exp of a non-finite interval".into()));
    }
    let hi = x.hi.exp();
    if !hi.is_finite() || widen_up(hi).is_infinite() {
        return Err(Error::RangeExceeded(Direction::Up));
    }
    let lo = widen_down(x.lo.exp()).max(0.0);
    Ok(RealInterval { lo, hi: widen_up(hi) })
}

/// Applies `f` to a dyadic pair and returns an ordering or a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DyadicOp {
    Add,
    Sub,
    Mul,
    Cmp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DyadicOutcome {
    Value(DyadicRational),
    Ordering(Ordering),
}

pub fn dyadic_arith(a: &DyadicRational, b: &DyadicRational, op: DyadicOp) -> DyadicOutcome {
    match op {
        DyadicOp::Add => DyadicOutcome::Value(a + b),
        DyadicOp::Sub => DyadicOutcome::Value(a - b),
        DyadicOp::Mul => DyadicOutcome::Value(a * b),
        DyadicOp::Cmp => DyadicOutcome::Ordering(a.cmp(b)),
    }
}
