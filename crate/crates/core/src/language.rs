//! Words of the coded subshift `Y`, the closure of `Φ(X)`.
//!
//! Because `Φ(X)` is shift-invariant, `L_n(Y)` is exactly the set of windows
//! `Φ(x)_0 … Φ(x)_{n-1}`. Letter `j` of such a window is `β` when some level
//! `i ≥ 5` has `(x + j) mod 2^i < i`; a level-`i` block is the run
//! `[s_i, s_i + i)` with `s_i = (-x) mod 2^i`.
//!
//! Once `2^d > n`, the levels above `d` can only add a `β` run at the start
//! of the window, or extend the run that starts at `s_d` when `s_d < n`. The
//! builder refines a residue tree just along the second kind of node. Every
//! leaf yields an over-approximation `w₀ ∨ β^p` and a set of explicit witness
//! points `x = low - 2^top` whose windows are evaluated exactly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coding::{hits, Letter, MIN_LEVEL};
use crate::error::{Error, Result};
use crate::odometer::mask;

/// Longest word a [`Word`] can hold.
pub const MAX_WORD: usize = 64;

/// A finite word over `{α, β}`; bit `j` of `bits` is set when letter `j` is `β`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    bits: u64,
    len: u8,
}

fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl Word {
    pub fn from_bits(bits: u64, len: usize) -> Result<Word> {
        if len == 0 || len > MAX_WORD {
            return Err(Error::Domain(format!("word length {len} outside 1..={MAX_WORD}")));
        }
        Ok(Word { bits: bits & low_mask(len), len: len as u8 })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Word> {
        let bits = letters.iter().enumerate().fold(0u64, |acc, (j, l)| acc | (u64::from(l.is_beta()) << j));
        Word::from_bits(bits, letters.len())
    }

    pub fn repeat(letter: Letter, len: usize) -> Result<Word> {
        Word::from_bits(if letter.is_beta() { u64::MAX } else { 0 }, len)
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, j: usize) -> Letter {
        if (self.bits >> j) & 1 == 1 {
            Letter::Beta
        } else {
            Letter::Alpha
        }
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.len()).map(|j| self.get(j)).collect()
    }

    /// Letters `start .. start + len`.
    pub fn sub(&self, start: usize, len: usize) -> Result<Word> {
        if start + len > self.len() {
            return Err(Error::Domain(format!("subword {start}+{len} of a {}-letter word", self.len())));
        }
        Word::from_bits(self.bits >> start, len)
    }

    pub fn prefix(&self, len: usize) -> Result<Word> {
        self.sub(0, len)
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        let len = self.len() + other.len();
        if len > MAX_WORD {
            return Err(Error::LengthOverflow { len, max: MAX_WORD });
        }
        Word::from_bits(self.bits | (other.bits << self.len()), len)
    }

    pub fn push(&self, letter: Letter) -> Result<Word> {
        self.concat(&Word::from_letters(&[letter])?)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len() {
            write!(f, "{}", self.get(j))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        let letters: Option<Vec<Letter>> = s.trim().chars().map(Letter::from_char).collect();
        let letters = letters.ok_or_else(|| Error::Parse(format!("not an a/b word: {s:?}")))?;
        Word::from_letters(&letters)
    }
}

/// `(β count, longest β run)`.
pub fn word_stats(w: &Word) -> (u32, u32) {
    let mut run = 0u32;
    let mut best = 0u32;
    for j in 0..w.len() {
        if w.get(j).is_beta() {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    (w.bits.count_ones(), best)
}

/// Letters `0..n` caught by levels `5..=d` alone, for `x ≡ v (mod 2^d)`.
pub fn truncated_window(v: u128, d: u32, n: usize) -> u64 {
    let m = mask(d);
    (0..n).fold(0u64, |acc, j| {
        let y = v.wrapping_add(j as u128) & m;
        acc | (u64::from(hits(y, MIN_LEVEL, d)) << j)
    })
}

/// The 2-adic integer `low - 2^top`, with `low < 2^top`. Its orbit windows
/// are computed exactly: `x + j` is a non-negative integer once
/// `low + j ≥ 2^top`, and otherwise only levels up to `top` can catch it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Witness {
    pub low: u128,
    pub top: u128,
}

impl Witness {
    pub fn window(&self, n: usize) -> u64 {
        (0..n).fold(0u64, |acc, j| acc | (u64::from(self.letter_is_beta(j as u128)) << j))
    }

    pub fn letter_is_beta(&self, j: u128) -> bool {
        let y = self.low + j;
        if self.top < 128 && y >> self.top != 0 {
            return true;
        }
        let cap = self.top.min(128) as u32;
        hits(y, MIN_LEVEL, cap) || (self.top >= u128::from(MIN_LEVEL) && self.top > y)
    }
}

/// Answer of [`LanguageTable::contains`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Containment {
    CertainIn,
    CertainOut,
    Unknown,
}

/// Which side of a [`LanguageTable`] to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Under,
    Over,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Under => write!(f, "under"),
            Side::Over => write!(f, "over"),
        }
    }
}

/// Under- and over-approximations of `L_n(Y)` for `1 ≤ n ≤ max_len`.
#[derive(Clone, Debug)]
pub struct LanguageTable {
    max_len: usize,
    build_depth: u32,
    under: Vec<BTreeSet<u64>>,
    over: Vec<BTreeSet<u64>>,
}

impl LanguageTable {
    /// Default build depth for a given word length.
    pub fn default_depth(max_len: usize) -> u32 {
        max_len as u32 + 16
    }

    pub fn build(max_len: usize, depth: u32) -> Result<LanguageTable> {
        if max_len == 0 || max_len > MAX_WORD {
            return Err(Error::Domain(format!("max_len {max_len} outside 1..={MAX_WORD}")));
        }
        let needed = max_len as u32 + 5;
        if depth < needed {
            return Err(Error::InsufficientDepth { needed, have: depth });
        }
        if depth > 120 {
            return Err(Error::Domain(format!("build depth {depth} above 120")));
        }
        let n = max_len;
        let full = low_mask(n);
        let d0 = MIN_LEVEL.max(usize::BITS - n.leading_zeros());
        let mut under_top = BTreeSet::new();
        let mut over_top = BTreeSet::new();
        let mut stack: Vec<(u32, u128)> = (0..(1u128 << d0)).map(|v| (d0, v)).collect();
        while let Some((d, v)) = stack.pop() {
            let s = (1u128 << d) - v;
            let s = if s == 1u128 << d { 0 } else { s };
            let quiet = s >= n as u128;
            if !quiet && d < depth {
                stack.push((d + 1, v));
                stack.push((d + 1, v + (1u128 << d)));
                continue;
            }
            let w0 = truncated_window(v, d, n);
            for p in 0..=n {
                over_top.insert(w0 | low_mask(p));
                if !quiet {
                    over_top.insert(w0 | low_mask(p) | (full & !low_mask(s as usize)));
                }
            }
            let mut witnesses = vec![
                Witness { low: v, top: u128::from(d) },
                Witness { low: v, top: u128::from(d) + 1 },
                Witness { low: v + (1u128 << d), top: u128::from(d) + 1 },
            ];
            let first = (u128::from(d) + 1).max(v + 1);
            let last = v + n as u128;
            let mut top = first;
            while top <= last {
                witnesses.push(Witness { low: v, top });
                top += 1;
            }
            for w in witnesses {
                under_top.insert(w.window(n));
            }
        }
        under_top.insert(full);
        over_top.insert(full);
        let prefixes = |top: &BTreeSet<u64>| -> Vec<BTreeSet<u64>> {
            let mut out = vec![BTreeSet::new(); n + 1];
            for m in 1..=n {
                out[m] = top.iter().map(|w| w & low_mask(m)).collect();
            }
            out
        };
        Ok(LanguageTable {
            max_len,
            build_depth: depth,
            under: prefixes(&under_top),
            over: prefixes(&over_top),
        })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn build_depth(&self) -> u32 {
        self.build_depth
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == 0 || len > self.max_len {
            return Err(Error::LengthOverflow { len, max: self.max_len });
        }
        Ok(())
    }

    pub fn words(&self, side: Side, len: usize) -> Result<Vec<Word>> {
        self.check_len(len)?;
        let set = match side {
            Side::Under => &self.under[len],
            Side::Over => &self.over[len],
        };
        set.iter().map(|&b| Word::from_bits(b, len)).collect()
    }

    pub fn count(&self, side: Side, len: usize) -> Result<usize> {
        self.check_len(len)?;
        Ok(match side {
            Side::Under => self.under[len].len(),
            Side::Over => self.over[len].len(),
        })
    }

    pub fn contains(&self, w: &Word) -> Result<Containment> {
        self.check_len(w.len())?;
        if self.under[w.len()].contains(&w.bits) {
            Ok(Containment::CertainIn)
        } else if !self.over[w.len()].contains(&w.bits) {
            Ok(Containment::CertainOut)
        } else {
            Ok(Containment::Unknown)
        }
    }

    /// Membership in the given side; `Over` treats unknown words as present.
    pub fn in_side(&self, w: &Word, side: Side) -> Result<bool> {
        Ok(match (self.contains(w)?, side) {
            (Containment::CertainIn, _) => true,
            (Containment::Unknown, Side::Over) => true,
            _ => false,
        })
    }

    /// Bounds on the largest `ρ` such that the centered `(2ρ-1)`-word around
    /// offset 0 lies in the language. `letter(i)` gives the letter at offset
    /// `i`; at most `reach` letters on each side are consulted. An upper bound
    /// of `None` means no excluded centered word was found.
    pub fn radius_bounds(&self, letter: impl Fn(i64) -> Letter, reach: usize) -> Result<(usize, Option<usize>)> {
        let mut lower = 0usize;
        let mut lower_open = true;
        for rho in 1.. {
            let len = 2 * rho - 1;
            if len > self.max_len || rho - 1 > reach {
                break;
            }
            let r = rho as i64 - 1;
            let letters: Vec<Letter> = (-r..=r).map(&letter).collect();
            let w = Word::from_letters(&letters)?;
            match self.contains(&w)? {
                Containment::CertainIn if lower_open => lower = rho,
                Containment::CertainIn => {}
                Containment::CertainOut => return Ok((lower, Some(rho - 1))),
                Containment::Unknown => lower_open = false,
            }
        }
        Ok((lower, None))
    }

    /// Greedy split into maximal segments of the over-approximation.
    pub fn maximal_decompose(&self, w: &Word) -> Result<Decomposition> {
        let mut segments = Vec::new();
        let mut q = 0usize;
        let mut cuts = Vec::new();
        while q < w.len() {
            let room = (w.len() - q).min(self.max_len);
            let mut best = 0usize;
            for j in 1..=room {
                if self.in_side(&w.sub(q, j)?, Side::Over)? {
                    best = j;
                } else {
                    break;
                }
            }
            if best == 0 {
                return Err(Error::Domain(format!("letter {} of {w} is not in the language", q)));
            }
            segments.push(w.sub(q, best)?);
            q += best;
            if q < w.len() {
                cuts.push(q);
            }
        }
        Ok(Decomposition { segments, cuts })
    }

    /// Line-per-word dump of one side, preceded by a header.
    pub fn to_text(&self, side: Side) -> String {
        let mut out = format!("# side={side} build_depth={} max_len={}\n", self.build_depth, self.max_len);
        for len in 1..=self.max_len {
            let set = match side {
                Side::Under => &self.under[len],
                Side::Over => &self.over[len],
            };
            for &b in set {
                let w = Word { bits: b, len: len as u8 };
                out.push_str(&format!("{len} {w}\n"));
            }
        }
        out
    }
}

/// `(centered word radius lower bound, upper bound)` for a two-sided window of
/// `2r + 1` letters indexed `-r..=r`.
pub fn two_sided_radius(window: &[Letter], table: &LanguageTable) -> Result<(usize, Option<usize>)> {
    if window.len().is_multiple_of(2) {
        return Err(Error::Domain("two-sided window needs odd length".into()));
    }
    if window.len() > table.max_len() {
        return Err(Error::LengthOverflow { len: window.len(), max: table.max_len() });
    }
    let r = window.len() / 2;
    table.radius_bounds(|i| window[(i + r as i64) as usize], r)
}

/// Result of [`LanguageTable::maximal_decompose`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub segments: Vec<Word>,
    /// Start offsets of segments after the first.
    pub cuts: Vec<usize>,
}

impl Decomposition {
    pub fn lengths(&self) -> Vec<usize> {
        self.segments.iter().map(Word::len).collect()
    }

    pub fn pieces(&self) -> usize {
        self.segments.len()
    }
}
