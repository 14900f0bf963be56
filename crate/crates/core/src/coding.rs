//! The set `A = {x : DN_i(x) < i for some i ≥ 5}`, its truncations `A_k`,
//! error sets `E_k`, level sets `B_m`, and the letter map `x ↦ α | β`.
//!
//! Membership is decided from finitely many bits. A positive answer is
//! certain; a negative one carries a rigorous bound on the conditional
//! probability that unseen bits still put the point in the set.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::DyadicRational;
use crate::odometer::{OdometerPoint, Residue};

/// Smallest level `i` in the union defining `A`.
pub const MIN_LEVEL: u32 = 5;

/// Conditional tail masses are never reported below `2^-TAIL_FLOOR`.
pub const TAIL_FLOOR: i64 = 256;

/// Largest `m` kept in the `q_m` cache.
pub const Q_CACHE: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    Alpha,
    Beta,
}

impl Letter {
    pub fn is_beta(self) -> bool {
        self == Letter::Beta
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a' | 'A' | 'α' => Some(Letter::Alpha),
            'b' | 'B' | 'β' => Some(Letter::Beta),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::Alpha => 'a',
            Letter::Beta => 'b',
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Tri-state answer: `In` is certain; `Possibly(m)` bounds the conditional
/// probability of membership by `m`, and `Possibly(0)` is certainly out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    In,
    Possibly(DyadicRational),
}

impl Membership {
    pub fn out() -> Self {
        Membership::Possibly(DyadicRational::zero())
    }

    pub fn is_in(&self) -> bool {
        matches!(self, Membership::In)
    }

    pub fn is_certainly_out(&self) -> bool {
        matches!(self, Membership::Possibly(m) if m.is_zero())
    }

    /// The bound `m`, with `In` reported as `1`.
    pub fn mass(&self) -> DyadicRational {
        match self {
            Membership::In => DyadicRational::one(),
            Membership::Possibly(m) => m.clone(),
        }
    }
}

/// Members of the family built from `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetFamily {
    A,
    /// Levels `5..=k`.
    Ak(u32),
    /// Levels `k+1..`.
    Ek(u32),
    /// Points first caught at level `m`.
    Bm(u32),
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFamily::A => write!(f, "A"),
            SetFamily::Ak(k) => write!(f, "A_{k}"),
            SetFamily::Ek(k) => write!(f, "E_{k}"),
            SetFamily::Bm(m) => write!(f, "B_{m}"),
        }
    }
}

/// Whether some level `i ∈ [lo, hi]` has `v mod 2^i < i`. Requires `hi ≤ 128`.
///
/// For `i ≥ 8` the condition forces bits `8..i` to vanish, so it reduces to a
/// trailing-zero count and the low byte.
pub fn hits(v: u128, lo: u32, hi: u32) -> bool {
    let lo = lo.max(1);
    let hi = hi.min(128);
    if lo > hi {
        return false;
    }
    for i in lo..=hi.min(7) {
        if v & ((1u128 << i) - 1) < u128::from(i) {
            return true;
        }
    }
    let low = (v & 255) as u32;
    let run = 8 + (v >> 8).trailing_zeros();
    let upper = hi.min(run);
    let lower = lo.max(8).max(low + 1);
    lower <= upper
}

/// Largest level `i ∈ [5, depth]` with `v mod 2^i < i`.
pub fn max_level(v: u128, depth: u32) -> Option<u32> {
    let depth = depth.min(128);
    if depth >= 8 {
        let low = (v & 255) as u32;
        let upper = depth.min(8 + (v >> 8).trailing_zeros());
        if 8.max(low + 1) <= upper {
            return Some(upper);
        }
    }
    (MIN_LEVEL..=depth.min(7)).rev().find(|&i| v & ((1u128 << i) - 1) < u128::from(i))
}

/// Bound on the conditional mass of `⋃_{i ≥ i_min} {DN_i < i}` for the
/// extensions of a depth-`d` residue `v` that no level `≤ d` catches, where
/// also `i_min > v`. Such a level needs bits `d..i` to vanish when
/// `i ≤ v + 2^d`; these events are nested, and the rest is a geometric tail
/// below `2^{d-i_min-d}`.
fn tail_mass(v: u128, d: u32, first_level: u32, last_level: Option<u32>) -> DyadicRational {
    let i_min = v.max(u128::from(d)).max(u128::from(first_level.saturating_sub(1))).saturating_add(1);
    if let Some(k) = last_level {
        if i_min > u128::from(k) {
            return DyadicRational::zero();
        }
    }
    let e = if i_min > (1u128 << 40) { i64::MIN / 2 } else { i64::from(d) - i_min as i64 };
    let e = e.max(-TAIL_FLOOR);
    if e >= 0 {
        return DyadicRational::one();
    }
    // 2^e (1 + 2^-d) = (2^d + 1) 2^(e-d)
    let m = DyadicRational::new((1i128 << d.min(120)) + 1, e - i64::from(d.min(120)));
    m.min(DyadicRational::one())
}

fn require_depth(r: &Residue, needed: u32) -> Result<()> {
    if r.depth() < needed {
        return Err(Error::InsufficientDepth { needed, have: r.depth() });
    }
    Ok(())
}

fn require_param(p: u32) -> Result<()> {
    if p < MIN_LEVEL {
        return Err(Error::Domain(format!("family parameter {p} below {MIN_LEVEL}")));
    }
    Ok(())
}

/// Membership of a residue in `A`.
pub fn member_a(r: &Residue) -> Result<Membership> {
    require_depth(r, MIN_LEVEL)?;
    let (v, d) = (r.value(), r.depth());
    if hits(v, MIN_LEVEL, d) {
        Ok(Membership::In)
    } else {
        Ok(Membership::Possibly(tail_mass(v, d, MIN_LEVEL, None)))
    }
}

/// Membership in any set of the family.
pub fn member_family(r: &Residue, which: SetFamily) -> Result<Membership> {
    require_depth(r, MIN_LEVEL)?;
    let (v, d) = (r.value(), r.depth());
    match which {
        SetFamily::A => member_a(r),
        SetFamily::Ak(k) => {
            require_param(k)?;
            if hits(v, MIN_LEVEL, k.min(d)) {
                Ok(Membership::In)
            } else if d >= k {
                Ok(Membership::out())
            } else {
                Ok(Membership::Possibly(tail_mass(v, d, MIN_LEVEL, Some(k))))
            }
        }
        SetFamily::Ek(k) => {
            require_param(k)?;
            if hits(v, k + 1, d) {
                Ok(Membership::In)
            } else {
                Ok(Membership::Possibly(tail_mass(v, d, k + 1, None)))
            }
        }
        SetFamily::Bm(m) => {
            require_param(m)?;
            if m == MIN_LEVEL {
                return Ok(if v & 31 < 5 { Membership::In } else { Membership::out() });
            }
            if q_coefficient(m) == 0 {
                return Ok(Membership::out());
            }
            let target = u128::from(m - 1);
            if d >= m {
                Ok(if r.dn(m)? == target { Membership::In } else { Membership::out() })
            } else if target & crate::odometer::mask(d) == v {
                Ok(Membership::Possibly(DyadicRational::pow2(-i64::from(m - d))))
            } else {
                Ok(Membership::out())
            }
        }
    }
}

/// Like [`member_family`], but refuses `A_k` and `B_m` queries whose answer
/// would not be fully determined at the residue's depth.
pub fn member_family_exact(r: &Residue, which: SetFamily) -> Result<Membership> {
    match which {
        SetFamily::Ak(p) | SetFamily::Bm(p) => require_depth(r, p)?,
        _ => {}
    }
    member_family(r, which)
}

/// `φ`: `β` on `A`, `α` elsewhere. The membership says how sure the letter is.
pub fn phi_letter(r: &Residue) -> Result<(Letter, Membership)> {
    let m = member_a(r)?;
    let letter = if m.is_in() { Letter::Beta } else { Letter::Alpha };
    Ok((letter, m))
}

/// Letters `Φ(x)_n` for `n ∈ [n_from, n_to]`, each read from `T^n` of the
/// residue at its own depth.
pub fn phi_window(r: &Residue, n_from: i64, n_to: i64) -> Result<Vec<(Letter, Membership)>> {
    if n_from > n_to {
        return Err(Error::Domain(format!("empty window [{n_from}, {n_to}]")));
    }
    (n_from..=n_to).map(|n| phi_letter(&r.step(i128::from(n)))).collect()
}

/// [`phi_window`] on a point, materializing `refine_to` bits.
pub fn phi_window_point(
    p: &OdometerPoint,
    n_from: i64,
    n_to: i64,
    refine_to: u32,
) -> Result<Vec<(Letter, Membership)>> {
    if refine_to < MIN_LEVEL {
        return Err(Error::InsufficientDepth { needed: MIN_LEVEL, have: refine_to });
    }
    phi_window(&p.residue(refine_to)?, n_from, n_to)
}

fn q_direct(m: u32) -> u8 {
    let target = u128::from(m - 1);
    let top = (m - 1).min(127);
    let empty = (MIN_LEVEL..=top).any(|i| target & ((1u128 << i) - 1) < u128::from(i));
    u8::from(!empty)
}

/// `q_m ∈ {0, 1}`: whether `B_m` is non-empty, for `m ≥ 6`.
pub fn q_coefficient(m: u32) -> u8 {
    static CACHE: OnceLock<Vec<u8>> = OnceLock::new();
    assert!(m >= 6, "q_m is defined for m >= 6");
    let cache = CACHE.get_or_init(|| (0..=Q_CACHE).map(|m| if m < 6 { 0 } else { q_direct(m) }).collect());
    match cache.get(m as usize) {
        Some(&q) => q,
        None => q_direct(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn res(d: u32, v: u128) -> Residue {
        Residue::new(d, v).unwrap()
    }

    fn literal_in_a(d: u32, v: u128, lo: u32, hi: u32) -> bool {
        (lo..=hi.min(d)).any(|i| (0..i).any(|j| v.wrapping_sub(u128::from(j)) % (1u128 << i) == 0))
    }

    #[test]
    fn decision_rule_matches_union_of_cylinders() {
        for d in 5..=12u32 {
            for v in 0..(1u128 << d) {
                assert_eq!(hits(v, 5, d), literal_in_a(d, v, 5, d), "d={d} v={v}");
                let expect = (5..=d).rev().find(|&i| literal_in_a(i, v & ((1 << i) - 1), i, i));
                assert_eq!(max_level(v, d), expect, "d={d} v={v}");
            }
        }
    }

    #[test]
    fn hits_fast_path_agrees_with_scan() {
        let samples = [0u128, 1, 7, 255, 256, 300, 1 << 20, (1 << 20) + 3, u128::MAX, 1 << 100];
        for &v in &samples {
            for d in 5..=128u32 {
                let slow = (5..=d).any(|i| {
                    let m = if i == 128 { v } else { v & ((1u128 << i) - 1) };
                    m < u128::from(i)
                });
                assert_eq!(hits(v, 5, d), slow, "v={v} d={d}");
            }
        }
    }

    #[test]
    fn member_a_examples() {
        assert!(member_a(&res(5, 0)).unwrap().is_in());
        assert!(member_a(&res(5, 4)).unwrap().is_in());
        let m = member_a(&res(5, 6)).unwrap();
        assert!(!m.is_in());
        let mass = m.mass();
        assert!(mass <= DyadicRational::ratio(1, 1));
        // Extensions with bits 5 and 6 clear reach A at level 7.
        let hit = (0..4u128).filter(|t| hits(6 | (t << 5), 5, 7)).count();
        assert_eq!(hit, 1);
        assert!(mass >= DyadicRational::ratio(1, 2));
        assert!(matches!(member_a(&res(4, 0)), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn tail_bound_dominates_extension_counts() {
        for d in 5..=9u32 {
            for v in 0..(1u128 << d) {
                let Membership::Possibly(m) = member_a(&res(d, v)).unwrap() else { continue };
                let extra = 18 - d;
                let hit = (0..(1u128 << extra)).filter(|t| hits(v | (t << d), 5, 18)).count();
                let frac = DyadicRational::ratio(hit as i64, extra);
                assert!(frac <= m, "d={d} v={v} frac={frac} m={m}");
            }
        }
    }

    #[test]
    fn tail_bound_dominates_monte_carlo() {
        let d = 6;
        for v in [6u128, 7, 8, 20, 40] {
            let m = member_a(&res(d, v)).unwrap().mass().to_f64();
            let n = 4000u64;
            let hit = (0..n)
                .filter(|&s| {
                    let hi = crate::odometer::sample_point(s ^ (v as u64) << 32).dn(128).unwrap();
                    hits(v | (hi << d), 5, 128)
                })
                .count() as f64
                / n as f64;
            let se = (m * (1.0 - m) / n as f64).sqrt().max(1.0 / n as f64);
            assert!(hit <= m + 4.0 * se, "v={v} hit={hit} m={m}");
        }
    }

    #[test]
    fn absolute_tail_mass_never_grows_under_refinement() {
        for d in 5..=14u32 {
            for v in (0..(1u128 << d)).step_by(7) {
                for which in [SetFamily::A, SetFamily::Ek(6), SetFamily::Ak(20), SetFamily::Bm(17)] {
                    let parent = member_family(&res(d, v), which).unwrap();
                    for b in [false, true] {
                        let child = member_family(&res(d, v).refine(b).unwrap(), which).unwrap();
                        if parent.is_in() {
                            assert!(child.is_in());
                        }
                        if !child.is_in() {
                            assert!(child.mass().scale_pow2(-1) <= parent.mass(), "{which} d={d} v={v}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn family_nesting() {
        for d in [10u32, 16] {
            for v in (0..(1u128 << d)).step_by(13) {
                let r = res(d, v);
                for k in 5..d {
                    if member_family(&r, SetFamily::Ak(k)).unwrap().is_in() {
                        assert!(member_family(&r, SetFamily::Ak(k + 1)).unwrap().is_in());
                        assert!(member_a(&r).unwrap().is_in());
                    }
                    if member_family(&r, SetFamily::Ek(k + 1)).unwrap().is_in() {
                        assert!(member_family(&r, SetFamily::Ek(k)).unwrap().is_in());
                    }
                }
            }
        }
    }

    #[test]
    fn levels_partition_a() {
        let d = 12;
        for v in 0..(1u128 << d) {
            let r = res(d, v);
            let count = (5..=d).filter(|&m| member_family(&r, SetFamily::Bm(m)).unwrap().is_in()).count();
            let in_a = hits(v, 5, d);
            assert_eq!(count, usize::from(in_a), "v={v}");
        }
    }

    #[test]
    fn b5_has_five_of_32() {
        let n = (0..32u128).filter(|&v| member_family(&res(5, v), SetFamily::Bm(5)).unwrap().is_in()).count();
        assert_eq!(n, 5);
    }

    #[test]
    fn level_visits_are_periodic() {
        for m in 5..=12u32 {
            for start in [0u128, 3, 1000, 4095] {
                let r = res(12, start);
                let n = (0..(1i128 << m))
                    .filter(|&t| member_family(&r.step(t), SetFamily::Bm(m)).unwrap().is_in())
                    .count();
                let expect = if m == 5 { 5 } else { usize::from(q_coefficient(m)) };
                assert_eq!(n, expect, "m={m}");
            }
        }
    }

    #[test]
    fn family_examples() {
        assert!(member_family(&res(6, 5), SetFamily::Bm(6)).unwrap().is_in());
        assert!(member_family(&res(6, 6), SetFamily::Bm(6)).unwrap().is_certainly_out());
        assert!(member_family(&res(10, 0), SetFamily::Ek(5)).unwrap().is_in());
        for v in 0..64u128 {
            assert_eq!(member_family(&res(6, v), SetFamily::Ak(5)).unwrap().is_in(), v % 32 < 5);
        }
        assert!(matches!(member_family_exact(&res(6, 5), SetFamily::Bm(9)), Err(Error::InsufficientDepth { .. })));
        let p = member_family(&res(6, 8), SetFamily::Bm(9)).unwrap();
        assert_eq!(p, Membership::Possibly(DyadicRational::ratio(1, 3)));
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_coefficient(6), 1);
        assert_eq!(q_coefficient(7), 1);
        assert_eq!(q_coefficient(33), 0);
        assert!((6..=32).all(|m| q_coefficient(m) == 1));
        assert!((33..=37).all(|m| q_coefficient(m) == 0));
        assert!((38..=64).all(|m| q_coefficient(m) == 1));
        assert_eq!(q_coefficient(Q_CACHE + 5), q_direct(Q_CACHE + 5));
    }

    #[test]
    fn phi_examples() {
        let zero = OdometerPoint::zeros();
        let w = phi_window_point(&zero, 0, 4, 40).unwrap();
        assert!(w.iter().all(|(l, m)| *l == Letter::Beta && m.is_in()));
        let (l, m) = phi_letter(&res(30, (1 << 30) - 1)).unwrap();
        assert_eq!(l, Letter::Alpha);
        assert!(m.mass() <= DyadicRational::pow2(-200));
        let r = res(20, 777_777);
        assert_eq!(phi_window(&r, 0, 0).unwrap()[0], phi_letter(&r).unwrap());
    }

    proptest! {
        #[test]
        fn window_is_shift_equivariant(v in any::<u128>(), k in 1i64..40) {
            let r = Residue::wrapping(64, v).unwrap();
            prop_assert_eq!(phi_window(&r, 1, k).unwrap(), phi_window(&r.step(1), 0, k - 1).unwrap());
        }

        #[test]
        fn negative_offsets_shift_residue(v in any::<u128>(), n in 1i64..100) {
            let r = Residue::wrapping(40, v).unwrap();
            prop_assert_eq!(phi_window(&r, -n, -n).unwrap(), phi_window(&r.step(-i128::from(n)), 0, 0).unwrap());
        }
    }
}
