//! The potential `ψ = ψ₀ + ψ₁` on the two-letter shift, its Birkhoff and
//! partition sums, the pressure, and verifiers for the quantitative bounds
//! around the equilibrium state `μ = Φ_*ν`.
//!
//! `ψ₀` is `-2` on `⟦β⟧` and `0` on `⟦α⟧`. `ψ₁(z) = -12/√n` when
//! `dist(z, Y) = 2^-n` and `0` on `Y`.

use crate::coding::{max_level, Letter, MIN_LEVEL};
use crate::error::{Error, Result};
use crate::exactnum::{DyadicInterval, DyadicRational, RealInterval};
use crate::language::{word_stats, LanguageTable, Side, Word};
use crate::measure::{mu_cylinder, nu_a_series, sample_seeds, settled_letter, settled_window, MeasureResult};
use crate::odometer::{sample_point, OdometerPoint, Tail, MAX_DEPTH};

/// Series terms used for `μ(⟦β⟧)`.
pub const MU_BETA_TERMS: u32 = 64;

/// Default cost guard on `Q_n`.
pub const DEFAULT_N_MAX: usize = 16;

/// Largest `n` accepted with an explicit override.
pub const OVERRIDE_N_MAX: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    pub beta_weight: f64,
    pub cusp_coeff: f64,
    pub cusp_exp: f64,
    pub min_run: u32,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self { beta_weight: 2.0, cusp_coeff: 12.0, cusp_exp: 0.5, min_run: MIN_LEVEL }
    }
}

impl PotentialParams {
    fn check(&self) -> Result<()> {
        let ok = [self.beta_weight, self.cusp_coeff, self.cusp_exp].iter().all(|x| x.is_finite() && *x > 0.0);
        if !ok || self.min_run == 0 {
            return Err(Error::Domain("potential parameters must be positive".into()));
        }
        Ok(())
    }

    /// `m^e` as an interval.
    fn power(&self, m: usize) -> Result<RealInterval> {
        let x = RealInterval::point(m as f64);
        if self.cusp_exp == 0.5 {
            x.sqrt()
        } else {
            x.ln()?.scale(self.cusp_exp).exp()
        }
    }

    /// `ψ₁` at distance `2^-ρ`.
    pub fn cusp(&self, rho: usize) -> Result<RealInterval> {
        if rho == 0 {
            return Err(Error::Domain("radius zero".into()));
        }
        Ok(RealInterval::point(self.cusp_coeff).div(&self.power(rho)?)?.neg())
    }

    /// `c · m^{1-e}`, the block penalty `Σ_{j<m} c/√m`.
    pub fn block_penalty(&self, m: usize) -> Result<RealInterval> {
        let m_real = RealInterval::point(m as f64);
        m_real.scale(self.cusp_coeff).div(&self.power(m)?)
    }

    fn psi0(&self, letter: Letter) -> RealInterval {
        match letter {
            Letter::Beta => RealInterval::point(-self.beta_weight),
            Letter::Alpha => RealInterval::zero(),
        }
    }
}

/// A two-sided sequence: `left` before `start`, then `body`, then `right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoSidedPoint {
    left: Letter,
    start: i64,
    body: Vec<Letter>,
    right: Letter,
}

impl TwoSidedPoint {
    pub fn new(left: Letter, start: i64, body: Vec<Letter>, right: Letter) -> Self {
        Self { left, start, body, right }
    }

    /// The constant sequence, a fixed point of the shift.
    pub fn constant(letter: Letter) -> Self {
        Self::new(letter, 0, Vec::new(), letter)
    }

    pub fn letter(&self, i: i64) -> Letter {
        if i < self.start {
            self.left
        } else {
            self.body.get((i - self.start) as usize).copied().unwrap_or(self.right)
        }
    }

    /// `σ^t`.
    pub fn shift(&self, t: i64) -> Self {
        Self { start: self.start - t, ..self.clone() }
    }

    /// Letters `center-r ..= center+r`.
    pub fn window(&self, center: i64, r: usize) -> Vec<Letter> {
        let r = r as i64;
        (center - r..=center + r).map(|i| self.letter(i)).collect()
    }

    fn is_constant(&self, letter: Letter) -> bool {
        self.left == letter && self.right == letter && self.body.iter().all(|&l| l == letter)
    }

    /// Membership in `Y` that needs no window: `β^∞` is in `Y` because the
    /// nonnegative integers all lie in `A`.
    pub fn certified_in_y(&self) -> bool {
        self.is_constant(Letter::Beta)
    }
}

/// How a finite word becomes a two-sided point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExtensionConvention {
    /// `α^∞ . w αβα α^∞`.
    #[default]
    Marker,
    /// The word surrounded by one constant letter.
    Fill(Letter),
}

impl ExtensionConvention {
    pub fn complete(&self, w: &Word) -> TwoSidedPoint {
        let mut body = w.letters();
        match self {
            ExtensionConvention::Marker => {
                body.extend([Letter::Alpha, Letter::Beta, Letter::Alpha]);
                TwoSidedPoint::new(Letter::Alpha, 0, body, Letter::Alpha)
            }
            ExtensionConvention::Fill(l) => TwoSidedPoint::new(*l, 0, body, *l),
        }
    }
}

/// `ψ₁` from radius bounds: `[cusp(lower), cusp(upper)]`, or up to `0` when
/// no upper bound is known.
fn psi1_from_radius(params: &PotentialParams, lower: usize, upper: Option<usize>) -> Result<RealInterval> {
    let lo = params.cusp(lower.max(1))?;
    let hi = match upper {
        Some(u) => params.cusp(u.max(1))?,
        None => RealInterval::zero(),
    };
    RealInterval::new(lo.lo(), hi.hi())
}

/// `ψ` of any point whose letters `-r..=r` are `window`. Without the rest of
/// the point, `ψ₁` can only be bounded by the radius found inside the window.
pub fn psi_window(window: &[Letter], table: &LanguageTable, params: &PotentialParams) -> Result<RealInterval> {
    params.check()?;
    let needed = 2 * params.min_run as usize + 1;
    if window.len() < needed {
        return Err(Error::InsufficientWindow { needed, have: window.len() });
    }
    if window.len().is_multiple_of(2) {
        return Err(Error::Domain("two-sided window needs odd length".into()));
    }
    let r = window.len() / 2;
    let (lower, upper) = table.radius_bounds(|i| window[(i + r as i64) as usize], r)?;
    Ok(params.psi0(window[r]).add(&psi1_from_radius(params, lower, upper)?))
}

/// `ψ(σ^i z)`.
pub fn psi_at(point: &TwoSidedPoint, i: i64, table: &LanguageTable, params: &PotentialParams) -> Result<RealInterval> {
    params.check()?;
    let psi0 = params.psi0(point.letter(i));
    if point.certified_in_y() {
        return Ok(psi0);
    }
    let (lower, upper) = table.radius_bounds(|j| point.letter(i + j), table.max_len())?;
    Ok(psi0.add(&psi1_from_radius(params, lower, upper)?))
}

/// `S_n ψ` over positions `0..n` of a point.
pub fn birkhoff_point(point: &TwoSidedPoint, n: usize, table: &LanguageTable, params: &PotentialParams) -> Result<RealInterval> {
    (0..n as i64).try_fold(RealInterval::zero(), |acc, i| Ok(acc.add(&psi_at(point, i, table, params)?)))
}

/// `S_n ψ(z_w)` for `n = |w|`.
pub fn birkhoff_psi(
    w: &Word,
    ext: ExtensionConvention,
    table: &LanguageTable,
    params: &PotentialParams,
) -> Result<RealInterval> {
    if w.is_empty() {
        return Err(Error::Domain("Birkhoff sum of the empty word".into()));
    }
    birkhoff_point(&ext.complete(w), w.len(), table, params)
}

fn guard(n: usize, n_max: usize) -> Result<()> {
    if n_max > OVERRIDE_N_MAX {
        return Err(Error::Refused(format!("n_max {n_max} exceeds {OVERRIDE_N_MAX}")));
    }
    if n == 0 || n > n_max {
        return Err(Error::Refused(format!("n = {n} outside 1..={n_max}")));
    }
    Ok(())
}

/// `Q_n = Σ_{|W| = n} e^{S_n ψ(z_W)}` over all `2^n` words.
pub fn partition_sum_qn(n: usize, n_max: usize, table: &LanguageTable, params: &PotentialParams) -> Result<RealInterval> {
    guard(n, n_max)?;
    let mut total = RealInterval::zero();
    for bits in 0..(1u64 << n) {
        let w = Word::from_bits(bits, n)?;
        let s = birkhoff_psi(&w, ExtensionConvention::Marker, table, params)?;
        total = total.add(&s.exp()?);
    }
    Ok(total)
}

/// `A(m) = Σ_{W ∈ L_m} e^{-2·βcount(W) - 12√m}` for `m = 0..=n_max`, with
/// `A(0)` unused.
pub fn block_sums(n_max: usize, table: &LanguageTable, side: Side, params: &PotentialParams) -> Result<Vec<RealInterval>> {
    params.check()?;
    let mut out = vec![RealInterval::zero()];
    for m in 1..=n_max {
        let penalty = params.block_penalty(m)?;
        let mut sum = RealInterval::zero();
        for w in table.words(side, m)? {
            let (beta, _) = word_stats(&w);
            let e = RealInterval::point(-params.beta_weight * f64::from(beta)).sub(&penalty);
            sum = sum.add(&e.exp()?);
        }
        out.push(sum);
    }
    Ok(out)
}

/// `Q_n^l` for all `1 ≤ l ≤ n ≤ n_max`, indexed `[l][n]`.
pub fn qnl_table(n_max: usize, table: &LanguageTable, side: Side, params: &PotentialParams) -> Result<Vec<Vec<RealInterval>>> {
    guard(n_max.max(1), n_max.max(1))?;
    let a = block_sums(n_max, table, side, params)?;
    let zero = RealInterval::zero();
    let mut q = vec![vec![zero; n_max + 1]; n_max + 1];
    q[1][1..].copy_from_slice(&a[1..]);
    for l in 2..=n_max {
        for n in l..=n_max {
            let mut s = zero;
            for m in 1..=n - (l - 1) {
                s = s.add(&q[l - 1][n - m].mul(&a[m]));
            }
            q[l][n] = s;
        }
    }
    Ok(q)
}

/// One entry of [`qnl_table`].
pub fn partition_sum_qnl(
    n: usize,
    l: usize,
    n_max: usize,
    table: &LanguageTable,
    side: Side,
    params: &PotentialParams,
) -> Result<RealInterval> {
    guard(n, n_max)?;
    if l == 0 || l > n {
        return Err(Error::Domain(format!("l = {l} outside 1..={n}")));
    }
    Ok(qnl_table(n, table, side, params)?[l][n])
}

/// `K Σ_l Q_n^l` over the upper language with `K = e^{3c}`, the bound the
/// maximal-word decomposition gives for `Q_n`.
pub fn decomposition_bound(n: usize, table: &LanguageTable, params: &PotentialParams) -> Result<RealInterval> {
    let q = qnl_table(n, table, Side::Over, params)?;
    let k = RealInterval::point(3.0 * params.cusp_coeff).exp()?;
    let sum = (1..=n).fold(RealInterval::zero(), |acc, l| acc.add(&q[l][n]));
    Ok(sum.mul(&k))
}

/// Enclosure of `μ(⟦β⟧) = ν(A)`.
pub fn mu_beta() -> DyadicInterval {
    nu_a_series(MU_BETA_TERMS).expect("series length is valid")
}

/// `P(ψ) = -2 μ(⟦β⟧)`, exact.
pub fn pressure_exact(params: &PotentialParams, series_terms: u32) -> Result<DyadicInterval> {
    params.check()?;
    let w = DyadicRational::from_f64(params.beta_weight).ok_or_else(|| Error::Domain("beta weight".into()))?;
    Ok(nu_a_series(series_terms)?.scale(&-w))
}

pub fn pressure(params: &PotentialParams, series_terms: u32) -> Result<RealInterval> {
    Ok(pressure_exact(params, series_terms)?.to_real())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendRow {
    pub n: usize,
    pub qn: RealInterval,
    /// `(1/n) log Q_n`.
    pub rate: RealInterval,
}

/// `(1/n) log Q_n` for `n ∈ [from, to]`.
pub fn qn_trend(from: usize, to: usize, n_max: usize, table: &LanguageTable, params: &PotentialParams) -> Result<Vec<TrendRow>> {
    (from.max(1)..=to)
        .map(|n| {
            let qn = partition_sum_qn(n, n_max, table, params)?;
            let rate = qn.ln()?.div(&RealInterval::point(n as f64))?;
            Ok(TrendRow { n, qn, rate })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsReport {
    pub n: usize,
    pub ratio: RealInterval,
    pub threshold: RealInterval,
    pub satisfied: bool,
    pub cylinder: MeasureResult,
    /// `μ(⟦β^n⟧) > 2^-n`, decided on the exact lower end.
    pub beats_uniform: bool,
}

/// `μ(⟦β^n⟧) / e^{-nP(ψ) + S_nψ(o)}` against `(e/2)^n`, at the fixed point
/// `o = β^∞` seen from `σ^shift(o)`.
pub fn gibbs_ratio_shifted(n: usize, shift: i64, table: &LanguageTable, params: &PotentialParams) -> Result<GibbsReport> {
    if n < 5 {
        return Err(Error::Refused(format!("n = {n} below 5")));
    }
    if n > crate::language::MAX_WORD {
        return Err(Error::LengthOverflow { len: n, max: crate::language::MAX_WORD });
    }
    let o = TwoSidedPoint::constant(Letter::Beta).shift(shift);
    let word = Word::from_letters(&o.window(n as i64 / 2, n / 2)[..n])?;
    let tol = DyadicRational::pow2(-(2 * n as i64 + 16));
    let cylinder = mu_cylinder(&word, &tol, 96)?;
    let s_n = birkhoff_point(&o, n, table, params)?;
    let p = pressure(params, MU_BETA_TERMS)?;
    let exponent = p.scale(-(n as f64)).add(&s_n);
    let ratio = cylinder.interval.to_real().div(&exponent.exp()?)?;
    let threshold = RealInterval::point(n as f64).exp()?.div(&RealInterval::point(2f64.powi(n as i32)))?;
    let satisfied = ratio.lo() > threshold.hi();
    let beats_uniform = *cylinder.interval.lo() > DyadicRational::pow2(-(n as i64));
    Ok(GibbsReport { n, ratio, threshold, satisfied, cylinder, beats_uniform })
}

pub fn gibbs_ratio_at_o(n: usize, table: &LanguageTable, params: &PotentialParams) -> Result<GibbsReport> {
    gibbs_ratio_shifted(n, 0, table, params)
}

/// Relative precision targeted for cylinder measures in the scan.
const RELATIVE_BITS: i64 = 10;

/// `μ(⟦w⟧)`, tightening the tolerance until the width is small next to the
/// lower end.
pub fn mu_cylinder_relative(w: &Word, depth_cap: u32) -> Result<MeasureResult> {
    let mut tol_exp = 20i64;
    loop {
        let r = mu_cylinder(w, &DyadicRational::pow2(-tol_exp), depth_cap)?;
        let lo = r.interval.lo();
        let good = !lo.is_zero() && r.interval.width() <= lo.scale_pow2(-RELATIVE_BITS);
        if good || tol_exp >= 100 || !r.converged {
            return Ok(MeasureResult { converged: r.converged && good, ..r });
        }
        tol_exp += 8;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub sample: usize,
    pub seed: u64,
    pub n: usize,
    pub word: Word,
    /// `log R_n`.
    pub log_ratio: RealInterval,
    /// `(1/n) log R_n`.
    pub rate: RealInterval,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VeryWeakScan {
    pub rows: Vec<ScanRow>,
    pub used: usize,
    pub discarded: usize,
    /// Samples skipped for being eventually constant.
    pub non_generic: usize,
}

impl VeryWeakScan {
    pub fn discard_rate(&self) -> f64 {
        let total = self.used + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }

    /// `|(1/n) log R_n|` at the interval midpoint, one value per sample.
    pub fn abs_rates(&self, n: usize) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| r.n == n).map(|r| (r.sample, r.rate.mid().abs())).collect()
    }

    pub fn median_abs_rate(&self, n: usize) -> Option<f64> {
        let mut v: Vec<f64> = self.abs_rates(n).into_iter().map(|(_, x)| x).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let k = v.len();
        Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
    }

    /// Fraction of samples whose `|(1/n) log R_n|` is smaller at `b` than at `a`.
    pub fn fraction_decreasing(&self, a: usize, b: usize) -> f64 {
        let at_a = self.abs_rates(a);
        let at_b = self.abs_rates(b);
        let pairs: Vec<bool> = at_a
            .iter()
            .filter_map(|&(s, x)| at_b.iter().find(|&&(t, _)| t == s).map(|&(_, y)| y < x))
            .collect();
        if pairs.is_empty() {
            return 0.0;
        }
        pairs.iter().filter(|&&d| d).count() as f64 / pairs.len() as f64
    }
}

/// Scan rows for one odometer point, or `None` when a needed letter stays open.
pub fn scan_point(x: &OdometerPoint, ns: &[usize], params: &PotentialParams) -> Result<Option<Vec<(usize, Word, RealInterval, bool)>>> {
    let n_top = ns.iter().copied().max().unwrap_or(0);
    let r = x.residue(MAX_DEPTH)?;
    let Some(letters) = settled_window(&r, 0, n_top) else { return Ok(None) };
    let p = pressure(params, MU_BETA_TERMS)?;
    let mut out = Vec::new();
    for &n in ns {
        let word = Word::from_letters(&letters[..n])?;
        let (beta, _) = word_stats(&word);
        let mu = mu_cylinder_relative(&word, 96)?;
        // Φ(x) lies in Y, so S_nψ = -2·βcount.
        let s_n = RealInterval::point(-params.beta_weight * f64::from(beta));
        let mu_real = mu.interval.to_real();
        let log_mu = if mu_real.lo() > 0.0 { mu_real.ln()? } else { RealInterval::new(f64::NEG_INFINITY, mu_real.hi().ln())? };
        let log_ratio = log_mu.add(&p.scale(n as f64)).sub(&s_n);
        out.push((n, word, log_ratio, mu.converged));
    }
    Ok(Some(out))
}

/// Samples `x ~ ν`, reads `W_n = Φ(x)_0..n`, and records `(1/n) log R_n`
/// with `R_n = μ(⟦W_n⟧) / e^{-nP(ψ) + S_nψ(Φ(x))}`.
pub fn very_weak_scan(samples: usize, ns: &[usize], seed: u64, params: &PotentialParams) -> Result<VeryWeakScan> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    if ns.is_empty() || ns.iter().any(|&n| n == 0 || n > crate::language::MAX_WORD) {
        return Err(Error::Domain("window lengths must lie in 1..=64".into()));
    }
    let mut scan = VeryWeakScan { rows: Vec::new(), used: 0, discarded: 0, non_generic: 0 };
    for (sample, s) in sample_seeds(seed, samples).into_iter().enumerate() {
        let x = sample_point(s);
        if !matches!(x.tail(), Tail::Seeded(_)) {
            scan.non_generic += 1;
            continue;
        }
        match scan_point(&x, ns, params)? {
            None => scan.discarded += 1,
            Some(rows) => {
                scan.used += 1;
                for (n, word, log_ratio, converged) in rows {
                    let rate = log_ratio.div(&RealInterval::point(n as f64)).unwrap_or(log_ratio);
                    scan.rows.push(ScanRow { sample, seed: s, n, word, log_ratio, rate, converged });
                }
            }
        }
    }
    Ok(scan)
}

fn settled_in_a(v: u128) -> Option<bool> {
    settled_letter(v).map(Letter::is_beta)
}

/// Level of the deepest block containing `v`, settled the same way.
fn settled_level(v: u128) -> Option<u32> {
    if v < 1 << 20 && settled_in_a(v).is_none() {
        return None;
    }
    Some(max_level(v, MAX_DEPTH).unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitBlock {
    pub n_p: u64,
    pub s_p: u32,
    /// `|O_p ∩ E_k|`.
    pub visits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitReport {
    pub k: u32,
    /// Steps from `x` to the normalized point `y`, if one was found.
    pub offset: Option<u64>,
    pub blocks: Vec<OrbitBlock>,
    /// Positions whose letter stayed open.
    pub unresolved: u64,
}

impl OrbitReport {
    /// `(n_p, visits before n_p)` for `p ≥ 1`.
    pub fn profile(&self) -> Vec<(u64, u64)> {
        let mut seen = 0;
        self.blocks
            .iter()
            .map(|b| {
                seen += b.visits;
                (b.n_p + (1u64 << b.s_p), seen)
            })
            .collect()
    }

    /// Number of `n_p` at which the visit frequency exceeds `(k+2)/2^k`.
    pub fn frequency_violations(&self) -> usize {
        let k = self.k;
        self.profile()
            .iter()
            .filter(|&&(n, seen)| u128::from(seen) << k > u128::from(k + 2) * u128::from(n))
            .count()
    }

    /// Largest frequency seen, as a float.
    pub fn max_frequency(&self) -> f64 {
        self.profile().iter().map(|&(n, seen)| seen as f64 / n as f64).fold(0.0, f64::max)
    }

    /// Blocks breaking `s_{p+1} ≥ s_p + 1` or `O_p ∩ E_k = ∅` for `s_p ≤ k`.
    pub fn claim_violations(&self) -> usize {
        let growth = self.blocks.windows(2).filter(|b| b[1].s_p < b[0].s_p + 1).count();
        let quiet = self.blocks.iter().filter(|b| b.s_p <= self.k && b.visits > 0).count();
        growth + quiet
    }

    pub fn h_k(&self) -> f64 {
        f64::from(self.k + 2) / 2f64.powi(self.k as i32)
    }
}

/// Block decomposition of the orbit of `x` for several `k` at once.
///
/// `x` is first moved to the next `y` with `y ∈ A` and `T^{-1} y ∉ A`. Blocks
/// are `O_p = [n_p, n_p + 2^{s_p})` with `s_p = κ(T^{n_p} y)`; only complete
/// blocks within `horizon` steps are reported.
pub fn orbit_profile(x: &OdometerPoint, ks: &[u32], horizon: u64) -> Result<Vec<OrbitReport>> {
    if ks.iter().any(|&k| !(MIN_LEVEL..MAX_DEPTH).contains(&k)) {
        return Err(Error::Domain("k must lie in 5..128".into()));
    }
    let mut reports: Vec<OrbitReport> =
        ks.iter().map(|&k| OrbitReport { k, offset: None, blocks: Vec::new(), unresolved: 0 }).collect();
    if matches!(x.tail(), Tail::Zeros) {
        // A nonnegative integer: its forward orbit never leaves A.
        return Ok(reports);
    }
    let base = x.residue(MAX_DEPTH)?.value();
    let at = |t: u64| base.wrapping_add(u128::from(t));
    let mut prev = settled_in_a(at(0));
    let mut offset = None;
    for t in 1..=horizon {
        let cur = settled_in_a(at(t));
        if prev == Some(false) && cur == Some(true) {
            offset = Some(t);
            break;
        }
        prev = cur;
    }
    let Some(offset) = offset else { return Ok(reports) };
    let y = at(offset);
    let mut n_p = 0u64;
    loop {
        let v = y.wrapping_add(u128::from(n_p));
        if v == 0 {
            break;
        }
        let s_p = v.trailing_zeros();
        if s_p >= 63 || n_p + (1u64 << s_p) > horizon {
            break;
        }
        let mut visits = vec![0u64; ks.len()];
        let mut unresolved = 0u64;
        for j in 0..(1u64 << s_p) {
            match settled_level(v.wrapping_add(u128::from(j))) {
                Some(level) => {
                    for (c, &k) in visits.iter_mut().zip(ks) {
                        if level > k {
                            *c += 1;
                        }
                    }
                }
                None => unresolved += 1,
            }
        }
        for (rep, c) in reports.iter_mut().zip(visits) {
            rep.blocks.push(OrbitBlock { n_p, s_p, visits: c });
            rep.unresolved += unresolved;
        }
        n_p += 1u64 << s_p;
    }
    for rep in &mut reports {
        rep.offset = Some(offset);
    }
    Ok(reports)
}

pub fn orbit_structure(x: &OdometerPoint, k: u32, horizon: u64) -> Result<OrbitReport> {
    Ok(orbit_profile(x, &[k], horizon)?.remove(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaRow {
    pub id: String,
    pub instances: u64,
    pub worst_margin: f64,
    pub violations: u64,
    pub pass: bool,
}

impl LemmaRow {
    fn new(id: &str) -> Self {
        Self { id: id.into(), instances: 0, worst_margin: f64::INFINITY, violations: 0, pass: true }
    }

    fn record(&mut self, margin: f64, ok: bool) {
        self.instances += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if !ok {
            self.violations += 1;
            self.pass = false;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LemmaLimits {
    pub max_len: usize,
    pub n_max: usize,
    pub beta_levels: (u32, u32),
}

impl Default for LemmaLimits {
    fn default() -> Self {
        Self { max_len: 64, n_max: DEFAULT_N_MAX, beta_levels: (3, 6) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    /// Variants reported for comparison; they do not decide the outcome.
    pub diagnostics: Vec<LemmaRow>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, id: &str) -> Option<&LemmaRow> {
        self.rows.iter().chain(&self.diagnostics).find(|r| r.id == id)
    }
}

/// `|L⁻_d| ≤ 2(d+1)³`.
pub fn check_word_count(table: &LanguageTable, max_len: usize) -> Result<LemmaRow> {
    let mut row = LemmaRow::new("exist1");
    for d in 1..=max_len {
        let count = table.count(Side::Under, d)? as f64;
        let bound = 2.0 * ((d + 1) as f64).powi(3);
        row.record(bound - count, count <= bound);
    }
    Ok(row)
}

/// `-2·βcount(w) ≤ -2 μ(⟦β⟧).hi · d + c + 2 log₂ d` for every `w ∈ L⁻_d`.
pub fn check_birkhoff_bound(
    table: &LanguageTable,
    max_len: usize,
    constant: f64,
    id: &str,
    params: &PotentialParams,
) -> Result<LemmaRow> {
    let mb = mu_beta().hi().to_f64_up();
    let mut row = LemmaRow::new(id);
    for d in 1..=max_len {
        let dr = RealInterval::point(d as f64);
        let log2d = dr.ln()?.div(&RealInterval::point(2f64).ln()?)?;
        let rhs = RealInterval::point(mb)
            .scale(-params.beta_weight * d as f64)
            .add(&RealInterval::point(constant))
            .add(&log2d.scale(2.0));
        for w in table.words(Side::Under, d)? {
            let (beta, _) = word_stats(&w);
            let lhs = -params.beta_weight * f64::from(beta);
            let margin = rhs.lo() - lhs;
            row.record(margin, margin >= 0.0);
        }
    }
    Ok(row)
}

/// `Q_n^l ≤ (1/2)^l e^{-2 μ(⟦β⟧).lo · n}` for `1 ≤ l ≤ n ≤ n_max`; the margin
/// is the gap in logarithms.
pub fn check_qnl_bound(table: &LanguageTable, n_max: usize, params: &PotentialParams) -> Result<LemmaRow> {
    let mb = mu_beta().lo().to_f64_down();
    let q = qnl_table(n_max, table, Side::Under, params)?;
    let half_ln = RealInterval::point(2.0).ln()?;
    let mut row = LemmaRow::new("exists3");
    for n in 1..=n_max {
        for l in 1..=n {
            let log_bound = half_ln.scale(-(l as f64)).sub(&RealInterval::point(mb).scale(params.beta_weight * n as f64));
            let qh = q[l][n].hi();
            let ok = qh <= log_bound.lo().exp() && qh <= log_bound.exp()?.lo();
            let margin = if qh > 0.0 { log_bound.lo() - qh.ln() } else { f64::INFINITY };
            row.record(margin, ok);
        }
    }
    Ok(row)
}

/// `μ(⟦β⟧) ∈ [5/32, 6/32]`.
pub fn check_mu_beta() -> LemmaRow {
    let mb = mu_beta();
    let lo = DyadicRational::ratio(5, 5);
    let hi = DyadicRational::ratio(6, 5);
    let margin = (mb.lo() - &lo).min(&hi - mb.hi());
    let mut row = LemmaRow::new("calc");
    row.record(margin.to_f64_down(), !margin.is_negative());
    row
}

/// Every word of `L⁻_{2^l}` has at least `l - 1` letters `β`.
pub fn check_beta_count(table: &LanguageTable, levels: (u32, u32)) -> Result<LemmaRow> {
    let mut row = LemmaRow::new("beta_count");
    for l in levels.0..=levels.1 {
        let len = 1usize << l;
        if len > table.max_len() {
            return Err(Error::LengthOverflow { len, max: table.max_len() });
        }
        for w in table.words(Side::Under, len)? {
            let (beta, _) = word_stats(&w);
            let margin = f64::from(beta) - f64::from(l - 1);
            row.record(margin, margin >= 0.0);
        }
    }
    Ok(row)
}

/// One row per quantitative claim, over all instances within `limits`.
pub fn lemma_report(table: &LanguageTable, params: &PotentialParams, limits: &LemmaLimits) -> Result<LemmaReport> {
    params.check()?;
    let max_len = limits.max_len.min(table.max_len());
    let rows = vec![
        check_word_count(table, max_len)?,
        check_birkhoff_bound(table, max_len, 6.0, "exist2", params)?,
        check_qnl_bound(table, limits.n_max.min(max_len), params)?,
        check_mu_beta(),
        check_beta_count(table, limits.beta_levels)?,
    ];
    let diagnostics = vec![check_birkhoff_bound(table, max_len, 4.0, "exist2_plus4", params)?];
    Ok(LemmaReport { rows, diagnostics })
}
