//! The dyadic odometer: points of `{0,1}^ℕ` read as 2-adic integers, low bit
//! first, with `T(x) = x + 1`.

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest residue depth supported by [`Residue`].
pub const MAX_DEPTH: u32 = 128;

/// Default cap on how many bits a scan may materialize.
pub const DEFAULT_SCAN_LIMIT: u64 = 1 << 16;

pub(crate) fn mask(depth: u32) -> u128 {
    if depth >= 128 {
        u128::MAX
    } else {
        (1u128 << depth) - 1
    }
}

/// The first `depth` bits of a point, as the integer `DN_depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Residue {
    depth: u32,
    value: u128,
}

impl Residue {
    pub fn new(depth: u32, value: u128) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::Domain(format!("residue depth {depth} outside 1..={MAX_DEPTH}")));
        }
        if value & !mask(depth) != 0 {
            return Err(Error::Domain(format!("value {value} does not fit in {depth} bits")));
        }
        Ok(Self { depth, value })
    }

    /// Reduces `value` modulo `2^depth`.
    pub fn wrapping(depth: u32, value: u128) -> Result<Self> {
        Self::new(depth, value & mask(depth.min(MAX_DEPTH)))
    }

    /// Builds a residue from bits `a₀, a₁, …`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &b)| acc | (u128::from(b & 1) << i));
        Self::new(bits.len() as u32, value)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn bit(&self, i: u32) -> Result<bool> {
        if i >= self.depth {
            return Err(Error::InsufficientDepth { needed: i + 1, have: self.depth });
        }
        Ok((self.value >> i) & 1 == 1)
    }

    /// `DN_k`, the integer formed by the first `k` bits.
    pub fn dn(&self, k: u32) -> Result<u128> {
        if k > self.depth {
            return Err(Error::InsufficientDepth { needed: k, have: self.depth });
        }
        Ok(self.value & mask(k))
    }

    /// `T^t` at the same depth; exact in `ℤ₂` for every integer `t`.
    pub fn step(&self, t: i128) -> Residue {
        Residue { depth: self.depth, value: self.value.wrapping_add(t as u128) & mask(self.depth) }
    }

    /// Appends bit `a_depth`.
    pub fn refine(&self, bit: bool) -> Result<Residue> {
        if self.depth >= MAX_DEPTH {
            return Err(Error::Domain("residue already at maximum depth".into()));
        }
        Ok(Residue { depth: self.depth + 1, value: self.value | (u128::from(bit) << self.depth) })
    }

    /// Keeps the first `k` bits.
    pub fn truncate(&self, k: u32) -> Result<Residue> {
        Ok(Residue { depth: k, value: self.dn(k)? })
    }
}

/// How bits beyond the explicit prefix are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    Zeros,
    Ones,
    /// Independent fair bits drawn from a ChaCha8 stream keyed by the seed.
    Seeded(u64),
}

/// Result of [`OdometerPoint::kappa`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kappa {
    Finite(u64),
    Infinite,
}

fn seeded_word(seed: u64, word: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(word) * 2);
    rng.next_u64()
}

/// A point of `X`: explicit low words followed by a lazily generated tail.
///
/// Bit `i` is bit `i % 64` of word `i / 64`. Words below `prefix.len()` are
/// stored; higher words come from the tail, so repeated queries always agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdometerPoint {
    prefix: Vec<u64>,
    tail: Tail,
    scan_limit: u64,
}

impl OdometerPoint {
    pub fn new(tail: Tail) -> Self {
        Self { prefix: Vec::new(), tail, scan_limit: DEFAULT_SCAN_LIMIT }
    }

    pub fn zeros() -> Self {
        Self::new(Tail::Zeros)
    }

    pub fn ones() -> Self {
        Self::new(Tail::Ones)
    }

    /// Bits of `r` followed by `tail`.
    pub fn from_residue(r: Residue, tail: Tail) -> Self {
        let mut p = Self::new(tail);
        let words = r.depth().div_ceil(64) as usize;
        p.materialize(words);
        for w in 0..words {
            let lo = (w * 64) as u32;
            let take = (r.depth() - lo).min(64);
            let own = (r.value() >> lo) as u64 & (if take == 64 { u64::MAX } else { (1u64 << take) - 1 });
            let keep = if take == 64 { 0 } else { p.prefix[w] & !((1u64 << take) - 1) };
            p.prefix[w] = own | keep;
        }
        p
    }

    /// The point `value` (a non-negative integer), or `-value` when `negative`.
    pub fn from_integer(value: u128, negative: bool) -> Self {
        if negative && value != 0 {
            let r = Residue { depth: 128, value: value.wrapping_neg() };
            Self::from_residue(r, Tail::Ones)
        } else {
            Self::from_residue(Residue { depth: 128, value }, Tail::Zeros)
        }
    }

    pub fn with_scan_limit(mut self, limit: u64) -> Self {
        self.scan_limit = limit;
        self
    }

    pub fn scan_limit(&self) -> u64 {
        self.scan_limit
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    fn tail_word(&self, w: u64) -> u64 {
        match self.tail {
            Tail::Zeros => 0,
            Tail::Ones => u64::MAX,
            Tail::Seeded(seed) => seeded_word(seed, w),
        }
    }

    fn word(&self, w: u64) -> u64 {
        match self.prefix.get(w as usize) {
            Some(&x) => x,
            None => self.tail_word(w),
        }
    }

    fn materialize(&mut self, words: usize) {
        while self.prefix.len() < words {
            let w = self.tail_word(self.prefix.len() as u64);
            self.prefix.push(w);
        }
    }

    pub fn bit(&self, i: u64) -> bool {
        (self.word(i / 64) >> (i % 64)) & 1 == 1
    }

    /// `DN_k` for `k ≤ 128`.
    pub fn dn(&self, k: u32) -> Result<u128> {
        if k > MAX_DEPTH {
            return Err(Error::Domain(format!("dn({k}) needs more than 128 bits; use dn_big")));
        }
        let v = u128::from(self.word(0)) | (u128::from(self.word(1)) << 64);
        Ok(v & mask(k))
    }

    /// `DN_k` for any `k`.
    pub fn dn_big(&self, k: u64) -> BigUint {
        let words = k.div_ceil(64);
        let mut digits: Vec<u64> = (0..words).map(|w| self.word(w)).collect();
        if !k.is_multiple_of(64) {
            if let Some(last) = digits.last_mut() {
                *last &= (1u64 << (k % 64)) - 1;
            }
        }
        let mut le = Vec::with_capacity(digits.len() * 2);
        for d in digits {
            le.push(d as u32);
            le.push((d >> 32) as u32);
        }
        BigUint::new(le)
    }

    pub fn residue(&self, depth: u32) -> Result<Residue> {
        Residue::new(depth, self.dn(depth)?)
    }

    /// `T^t(x)`. Carries that run into the tail are followed bit by bit; a
    /// constant tail absorbs an endless carry by flipping, a seeded tail fails
    /// once the scan limit is exhausted.
    pub fn step(&self, t: i64) -> Result<OdometerPoint> {
        let mut p = self.clone();
        p.materialize(2);
        let negative = t < 0;
        let mut carry = t.unsigned_abs();
        let mut w = 0usize;
        while carry != 0 {
            if w >= p.prefix.len() {
                if (w as u64) * 64 >= p.scan_limit.max(128) {
                    match (p.tail, negative) {
                        (Tail::Ones, false) => {
                            p.tail = Tail::Zeros;
                            return Ok(p);
                        }
                        (Tail::Zeros, true) => {
                            p.tail = Tail::Ones;
                            return Ok(p);
                        }
                        _ => return Err(Error::ScanLimit(p.scan_limit)),
                    }
                }
                p.materialize(w + 1);
            }
            let x = p.prefix[w];
            if negative {
                let (r, borrow) = x.overflowing_sub(carry);
                p.prefix[w] = r;
                carry = u64::from(borrow);
            } else {
                let (r, over) = x.overflowing_add(carry);
                p.prefix[w] = r;
                carry = u64::from(over);
            }
            w += 1;
        }
        Ok(p)
    }

    /// 2-adic valuation: the number of zero bits before the first one.
    pub fn kappa(&self) -> Result<Kappa> {
        for (w, &x) in self.prefix.iter().enumerate() {
            if x != 0 {
                return Ok(Kappa::Finite(w as u64 * 64 + u64::from(x.trailing_zeros())));
            }
        }
        let start = self.prefix.len() as u64;
        match self.tail {
            Tail::Zeros => Ok(Kappa::Infinite),
            Tail::Ones => Ok(Kappa::Finite(start * 64)),
            Tail::Seeded(_) => {
                let end = self.scan_limit.div_ceil(64).max(start);
                (start..end)
                    .find_map(|w| {
                        let x = self.tail_word(w);
                        (x != 0).then(|| Kappa::Finite(w * 64 + u64::from(x.trailing_zeros())))
                    })
                    .ok_or(Error::ScanLimit(self.scan_limit))
            }
        }
    }
}

/// A `ν`-distributed point: every bit is an independent fair coin.
pub fn sample_point(seed: u64) -> OdometerPoint {
    OdometerPoint::new(Tail::Seeded(seed))
}
