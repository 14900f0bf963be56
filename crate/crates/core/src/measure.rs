//! Rigorous `ν`-probabilities of window events and `μ`-measures of cylinders.
//!
//! A window event fixes, for finitely many offsets `m`, whether `T^m(x)` lies
//! in a set of the family. [`event_measure`] refines a residue tree, always
//! splitting the node with the most unresolved mass, and returns an exact
//! dyadic enclosure.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::coding::{hits, member_family, q_coefficient, Letter, Membership, SetFamily, MIN_LEVEL};
use crate::error::{Error, Result};
use crate::exactnum::{DyadicInterval, DyadicRational};
use crate::language::Word;
use crate::odometer::{sample_point, OdometerPoint, Residue, MAX_DEPTH};

/// Depth every refinement starts from.
pub const BASE_DEPTH: u32 = 12;

/// Default refinement cap.
pub const DEFAULT_DEPTH_CAP: u32 = 40;

/// Refinement gives up after this many splits.
pub const SPLIT_BUDGET: usize = 1 << 20;

/// An α letter counts as settled once its tail mass is at most `2^-64`.
pub const SETTLE_EXPONENT: i64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub offset: i64,
    pub set: SetFamily,
    pub polarity: Polarity,
}

/// `⋂ T^{-m}(S)` or `⋂ T^{-m}(Sᶜ)` over the listed constraints.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowEvent {
    constraints: Vec<Constraint>,
}

impl WindowEvent {
    pub fn new(constraints: Vec<Constraint>) -> Result<Self> {
        let mut offsets: Vec<i64> = constraints.iter().map(|c| c.offset).collect();
        offsets.sort_unstable();
        if offsets.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::Domain("window event offsets must be distinct".into()));
        }
        Ok(Self { constraints })
    }

    pub fn single(offset: i64, set: SetFamily, polarity: Polarity) -> Self {
        Self { constraints: vec![Constraint { offset, set, polarity }] }
    }

    /// The event `Φ(x) ∈ ⟦w⟧`.
    pub fn cylinder(w: &Word) -> Self {
        let constraints = w
            .letters()
            .into_iter()
            .enumerate()
            .map(|(j, l)| Constraint {
                offset: j as i64,
                set: SetFamily::A,
                polarity: if l.is_beta() { Polarity::In } else { Polarity::Out },
            })
            .collect();
        Self { constraints }
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Every offset moved by `t`.
    pub fn shifted(&self, t: i64) -> Self {
        let constraints = self.constraints.iter().map(|c| Constraint { offset: c.offset + t, ..*c }).collect();
        Self { constraints }
    }
}

impl fmt::Display for WindowEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constraints.is_empty() {
            return write!(f, "X");
        }
        let parts: Vec<String> = self
            .constraints
            .iter()
            .map(|c| {
                let neg = if c.polarity == Polarity::Out { "^c" } else { "" };
                format!("T^-{}({}{})", c.offset, c.set, neg)
            })
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureResult {
    #[serde(with = "interval_serde")]
    pub interval: DyadicInterval,
    pub depth_used: u32,
    #[serde(with = "dyadic_serde")]
    pub undetermined_mass: DyadicRational,
    pub converged: bool,
}

pub(crate) mod dyadic_serde {
    use super::DyadicRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &DyadicRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DyadicRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) mod interval_serde {
    use super::{DyadicInterval, DyadicRational};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &DyadicInterval, s: S) -> Result<S::Ok, S::Error> {
        [x.lo().to_string(), x.hi().to_string()].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DyadicInterval, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo: DyadicRational = lo.parse().map_err(serde::de::Error::custom)?;
        let hi: DyadicRational = hi.parse().map_err(serde::de::Error::custom)?;
        DyadicInterval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

enum NodeStatus {
    Violated,
    /// Conditional bounds `lo ≤ P(event | residue) ≤ hi`.
    Bounds(DyadicRational, DyadicRational),
}

fn classify(r: &Residue, event: &WindowEvent) -> Result<NodeStatus> {
    let one = DyadicRational::one();
    let mut in_cap = one.clone();
    let mut lo_possible = true;
    let mut out_mass = DyadicRational::zero();
    for c in &event.constraints {
        let m = member_family(&r.step(i128::from(c.offset)), c.set)?;
        match (c.polarity, m) {
            (Polarity::In, Membership::In) => {}
            (Polarity::Out, Membership::In) => return Ok(NodeStatus::Violated),
            (Polarity::In, Membership::Possibly(m)) => {
                if m.is_zero() {
                    return Ok(NodeStatus::Violated);
                }
                lo_possible = false;
                in_cap = in_cap.min(m);
            }
            (Polarity::Out, Membership::Possibly(m)) => {
                if !m.is_zero() {
                    out_mass = &out_mass + &m;
                }
            }
        }
    }
    let lo = if lo_possible { (&one - &out_mass).max(DyadicRational::zero()) } else { DyadicRational::zero() };
    let hi = if lo_possible && out_mass.is_zero() { one } else { in_cap };
    Ok(NodeStatus::Bounds(lo, hi))
}

struct Node {
    gap: DyadicRational,
    residue: Residue,
    lo: DyadicRational,
    hi: DyadicRational,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gap
            .cmp(&other.gap)
            .then_with(|| other.residue.depth().cmp(&self.residue.depth()))
            .then_with(|| other.residue.value().cmp(&self.residue.value()))
    }
}

struct Tally {
    lo: DyadicRational,
    hi: DyadicRational,
    heap: BinaryHeap<Node>,
}

impl Tally {
    fn add(&mut self, r: Residue, event: &WindowEvent) -> Result<()> {
        let NodeStatus::Bounds(lo, hi) = classify(&r, event)? else { return Ok(()) };
        let scale = -i64::from(r.depth());
        let (lo, hi) = (lo.scale_pow2(scale), hi.scale_pow2(scale));
        self.lo = &self.lo + &lo;
        self.hi = &self.hi + &hi;
        if lo != hi {
            self.heap.push(Node { gap: &hi - &lo, residue: r, lo, hi });
        }
        Ok(())
    }
}

/// Enclosure of `ν(event)`, refined until the width is at most `tolerance`
/// or no node below `depth_cap` is left to split.
pub fn event_measure(event: &WindowEvent, tolerance: &DyadicRational, depth_cap: u32) -> Result<MeasureResult> {
    if tolerance.is_negative() || tolerance.is_zero() {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let depth_cap = depth_cap.clamp(MIN_LEVEL, MAX_DEPTH);
    let base = BASE_DEPTH.min(depth_cap);
    let mut tally = Tally { lo: DyadicRational::zero(), hi: DyadicRational::zero(), heap: BinaryHeap::new() };
    for v in 0..(1u128 << base) {
        tally.add(Residue::new(base, v)?, event)?;
    }
    let mut depth_used = base;
    let mut stuck = Vec::new();
    let mut converged = true;
    let mut splits = 0usize;
    while &tally.hi - &tally.lo > *tolerance {
        let Some(node) = tally.heap.pop() else { break };
        if node.residue.depth() >= depth_cap {
            stuck.push(node);
            continue;
        }
        splits += 1;
        if splits > SPLIT_BUDGET {
            tally.heap.push(node);
            converged = false;
            break;
        }
        tally.lo = &tally.lo - &node.lo;
        tally.hi = &tally.hi - &node.hi;
        for b in [false, true] {
            tally.add(node.residue.refine(b)?, event)?;
        }
        depth_used = depth_used.max(node.residue.depth() + 1);
    }
    let width = &tally.hi - &tally.lo;
    if width > *tolerance {
        converged = false;
    }
    Ok(MeasureResult {
        interval: DyadicInterval::new(tally.lo, tally.hi)?,
        depth_used,
        undetermined_mass: width,
        converged,
    })
}

/// `ν(A) = 5/32 + Σ_{m ≥ 6} q_m 2^-m`, summed to `terms` with the tail
/// bounded by `2^-terms`.
pub fn nu_a_series(terms: u32) -> Result<DyadicInterval> {
    if terms < 6 {
        return Err(Error::Domain("nu_A_series needs at least 6 terms".into()));
    }
    let mut lo = DyadicRational::ratio(5, 5);
    for m in 6..=terms {
        if q_coefficient(m) == 1 {
            lo = &lo + &DyadicRational::pow2(-i64::from(m));
        }
    }
    let hi = &lo + &DyadicRational::pow2(-i64::from(terms));
    DyadicInterval::new(lo, hi)
}

/// `μ(⟦w⟧) = ν(⋂_j T^{-j} A^{w_j})`.
pub fn mu_cylinder(w: &Word, tolerance: &DyadicRational, depth_cap: u32) -> Result<MeasureResult> {
    event_measure(&WindowEvent::cylinder(w), tolerance, depth_cap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub used: u64,
    pub discarded: u64,
}

impl MonteCarloEstimate {
    pub fn discard_rate(&self) -> f64 {
        let total = self.used + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }
}

/// Per-sample seeds derived from one master seed.
pub fn sample_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Letter of a depth-128 residue. `α` is settled once the open mass is at
/// most `2^-64`; `None` otherwise.
pub fn settled_letter(v: u128) -> Option<Letter> {
    if hits(v, MIN_LEVEL, MAX_DEPTH) {
        return Some(Letter::Beta);
    }
    if v >= 1 << 20 {
        return Some(Letter::Alpha);
    }
    let settle = DyadicRational::pow2(-SETTLE_EXPONENT);
    match member_family(&Residue::new(MAX_DEPTH, v).ok()?, SetFamily::A).ok()? {
        Membership::In => Some(Letter::Beta),
        Membership::Possibly(m) if m <= settle => Some(Letter::Alpha),
        Membership::Possibly(_) => None,
    }
}

/// Letters `from..from+n` of `Φ(x)` for a depth-128 residue of a sampled
/// point, or `None` when one of them stays open.
pub fn settled_window(r: &Residue, from: i64, n: usize) -> Option<Vec<Letter>> {
    (0..n as i64).map(|j| settled_letter(r.step(i128::from(from + j)).value())).collect()
}

/// Empirical frequency of `⟦w⟧` along `Φ(x), Φ(Tx), …` over `steps` shifts.
pub fn birkhoff_frequency(x: &OdometerPoint, w: &Word, steps: usize) -> Result<Option<f64>> {
    let r = x.residue(MAX_DEPTH)?;
    let Some(letters) = settled_window(&r, 0, steps + w.len() - 1) else { return Ok(None) };
    let target = w.letters();
    let hits = letters.windows(w.len()).filter(|win| *win == target.as_slice()).count();
    Ok(Some(hits as f64 / steps as f64))
}

/// Fraction of sampled points whose `Φ`-window equals `w`.
pub fn monte_carlo_cylinder(w: &Word, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let target = w.letters();
    let mut hit = 0u64;
    let mut used = 0u64;
    let mut discarded = 0u64;
    for s in sample_seeds(seed, samples as usize) {
        let r = sample_point(s).residue(MAX_DEPTH)?;
        match settled_window(&r, 0, w.len()) {
            Some(letters) => {
                used += 1;
                if letters == target {
                    hit += 1;
                }
            }
            None => discarded += 1,
        }
    }
    let p = if used == 0 { 0.0 } else { hit as f64 / used as f64 };
    let se = if used == 0 { f64::INFINITY } else { (p * (1.0 - p) / used as f64).sqrt() };
    Ok(MonteCarloEstimate { estimate: p, standard_error: se, used, discarded })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub k: u32,
    #[serde(with = "dyadic_serde")]
    pub nu_a_k: DyadicRational,
    pub nu_e_k: MeasureResult,
    #[serde(with = "dyadic_serde")]
    pub tail_bound: DyadicRational,
    pub within_bound: bool,
}

/// `ν(A_k)` by counting residues mod `2^k`, and an enclosure of `ν(E_k)`
/// checked against `Σ_{i>k} i 2^-i = (k+2)/2^k`.
pub fn family_measures(k_max: u32) -> Result<Vec<FamilyRow>> {
    if k_max < MIN_LEVEL {
        return Err(Error::Domain("k_max must be at least 5".into()));
    }
    if k_max > 24 {
        return Err(Error::Refused(format!("counting 2^{k_max} residues")));
    }
    (MIN_LEVEL..=k_max)
        .map(|k| {
            let count = (0..(1u128 << k)).filter(|&v| hits(v, MIN_LEVEL, k)).count();
            let nu_a_k = DyadicRational::new(count as i64, -i64::from(k));
            let tol = DyadicRational::pow2(-i64::from(k) - 12);
            let nu_e_k = event_measure(&WindowEvent::single(0, SetFamily::Ek(k), Polarity::In), &tol, 64)?;
            let tail_bound = DyadicRational::ratio(i64::from(k) + 2, k);
            let within_bound = *nu_e_k.interval.hi() <= tail_bound;
            Ok(FamilyRow { k, nu_a_k, nu_e_k, tail_bound, within_bound })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odometer::mask;
    use proptest::prelude::*;

    fn d(n: i64, s: u32) -> DyadicRational {
        DyadicRational::ratio(n, s)
    }

    fn five_six() -> DyadicInterval {
        DyadicInterval::new(d(5, 5), d(6, 5)).unwrap()
    }

    #[test]
    fn nu_a_by_refinement() {
        let e = WindowEvent::single(0, SetFamily::A, Polarity::In);
        let r = event_measure(&e, &DyadicRational::pow2(-36), 48).unwrap();
        assert!(r.converged);
        assert!(r.interval.is_subset_of(&five_six()), "{}", r.interval);
        assert!(r.interval.width() <= DyadicRational::pow2(-20));
        assert!(r.interval.overlaps(&nu_a_series(40).unwrap()));
    }

    #[test]
    fn a5_is_exact() {
        let e = WindowEvent::single(0, SetFamily::Ak(5), Polarity::In);
        let r = event_measure(&e, &DyadicRational::pow2(-30), 5).unwrap();
        assert_eq!(r.interval, DyadicInterval::point(d(5, 5)));
        assert!(r.converged);
    }

    #[test]
    fn empty_event_is_everything() {
        let r = event_measure(&WindowEvent::default(), &DyadicRational::pow2(-10), 40).unwrap();
        assert_eq!(r.interval, DyadicInterval::point(DyadicRational::one()));
    }

    #[test]
    fn series_examples() {
        assert_eq!(nu_a_series(6).unwrap(), DyadicInterval::new(d(11, 6), d(12, 6)).unwrap());
        let s = nu_a_series(32).unwrap();
        assert_eq!(s.width(), DyadicRational::pow2(-32));
        assert!(s.is_subset_of(&five_six()));
        assert!(nu_a_series(5).is_err());
    }

    #[test]
    fn cylinder_examples() {
        let tol = DyadicRational::pow2(-24);
        let b5 = mu_cylinder(&"bbbbb".parse().unwrap(), &tol, 48).unwrap();
        assert!(*b5.interval.lo() > d(1, 5));
        let a = mu_cylinder(&"a".parse().unwrap(), &tol, 48).unwrap();
        let b = mu_cylinder(&"b".parse().unwrap(), &tol, 48).unwrap();
        let one = DyadicInterval::point(DyadicRational::one());
        assert!(one.sub(&b.interval).overlaps(&a.interval));
        let total = ["aa", "ab", "ba", "bb"]
            .iter()
            .map(|w| mu_cylinder(&w.parse().unwrap(), &tol, 48).unwrap().interval)
            .fold(DyadicInterval::point(DyadicRational::zero()), |acc, x| acc.add(&x));
        assert!(total.contains(&DyadicRational::one()));
        let aba = mu_cylinder(&"aba".parse().unwrap(), &tol, 48).unwrap();
        assert!(aba.interval.lo().is_zero() && aba.interval.width() <= tol);
    }

    #[test]
    fn monte_carlo_examples() {
        let w: Word = "bbbbb".parse().unwrap();
        let mc = monte_carlo_cylinder(&w, 100_000, 7).unwrap();
        let exact = mu_cylinder(&w, &DyadicRational::pow2(-24), 48).unwrap().interval.to_real();
        assert!((mc.estimate - exact.mid()).abs() <= 4.0 * mc.standard_error, "{mc:?} {exact}");
        assert_eq!(mc.discarded, 0);
        assert_eq!(monte_carlo_cylinder(&"aba".parse().unwrap(), 20_000, 3).unwrap().estimate, 0.0);
        assert!(monte_carlo_cylinder(&w, 0, 1).is_err());
    }

    #[test]
    fn family_table() {
        let rows = family_measures(12).unwrap();
        assert_eq!(rows[0].nu_a_k, d(5, 5));
        for pair in rows.windows(2) {
            assert!(pair[0].nu_a_k <= pair[1].nu_a_k);
        }
        for row in &rows {
            assert!(row.within_bound, "k={}", row.k);
            let mut expect = d(5, 5);
            for m in 6..=row.k {
                if q_coefficient(m) == 1 {
                    expect = &expect + &DyadicRational::pow2(-i64::from(m));
                }
            }
            assert_eq!(row.nu_a_k, expect);
        }
    }

    fn exhaustive(event: &WindowEvent, depth: u32) -> DyadicRational {
        let count = (0..(1u128 << depth))
            .filter(|&v| {
                event.constraints().iter().all(|c| {
                    let s = (v.wrapping_add(c.offset as u128)) & mask(depth);
                    let r = Residue::new(depth, s).unwrap();
                    member_family(&r, c.set).unwrap().is_in() == (c.polarity == Polarity::In)
                })
            })
            .count();
        DyadicRational::new(count as i64, -i64::from(depth))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn small_events_match_exhaustive_count(
            picks in proptest::collection::vec((0i64..4, 5u32..=8, any::<bool>()), 1..4)
        ) {
            let mut cs = Vec::new();
            for (off, k, pol) in picks {
                if cs.iter().all(|c: &Constraint| c.offset != off) {
                    let polarity = if pol { Polarity::In } else { Polarity::Out };
                    cs.push(Constraint { offset: off, set: SetFamily::Ak(k), polarity });
                }
            }
            let e = WindowEvent::new(cs).unwrap();
            let r = event_measure(&e, &DyadicRational::pow2(-40), 16).unwrap();
            prop_assert_eq!(r.interval, DyadicInterval::point(exhaustive(&e, 16)));
        }

        #[test]
        fn deeper_caps_never_widen(w in "[ab]{1,4}", cap in 12u32..15) {
            let w: Word = w.parse().unwrap();
            let tol = DyadicRational::pow2(-60);
            let a = mu_cylinder(&w, &tol, cap).unwrap();
            let b = mu_cylinder(&w, &tol, cap + 3).unwrap();
            prop_assert!(b.interval.is_subset_of(&a.interval));
        }

        #[test]
        fn shifted_events_overlap(w in "[ab]{1,4}", t in -3i64..3) {
            let w: Word = w.parse().unwrap();
            let e = WindowEvent::cylinder(&w);
            let tol = DyadicRational::pow2(-16);
            let a = event_measure(&e, &tol, 40).unwrap();
            let b = event_measure(&e.shifted(t), &tol, 40).unwrap();
            prop_assert!(a.interval.overlaps(&b.interval));
        }
    }
}
