//! Acceptance checks, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::sync::OnceLock;

use odogibbs::coding::{hits, member_family, q_coefficient, SetFamily};
use odogibbs::exactnum::{DyadicInterval, DyadicRational, RealInterval};
use odogibbs::language::{word_stats, LanguageTable, Side, Word};
use odogibbs::measure::{birkhoff_frequency, event_measure, mu_cylinder, nu_a_series, sample_seeds, Polarity, WindowEvent};
use odogibbs::odometer::{sample_point, Residue};
use odogibbs::thermo::{
    check_beta_count, check_birkhoff_bound, check_word_count, gibbs_ratio_at_o, mu_beta, orbit_profile, qn_trend,
    qnl_table, very_weak_scan, PotentialParams,
};

fn table() -> &'static LanguageTable {
    static T: OnceLock<LanguageTable> = OnceLock::new();
    T.get_or_init(|| LanguageTable::build(64, LanguageTable::default_depth(64)).expect("language table"))
}

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn five_six() -> DyadicInterval {
    DyadicInterval::new(DyadicRational::ratio(5, 5), DyadicRational::ratio(6, 5)).unwrap()
}

#[test]
fn criterion_01_mu_beta_enclosure() {
    let limit = DyadicRational::pow2(-20);
    let series = nu_a_series(40).unwrap();
    let ev = WindowEvent::single(0, SetFamily::A, Polarity::In);
    let refined = event_measure(&ev, &DyadicRational::pow2(-36), 48).unwrap();
    let r = &refined.interval;
    let pass = series.width() <= limit
        && r.width() <= limit
        && series.is_subset_of(&five_six())
        && r.is_subset_of(&five_six())
        && series.overlaps(r)
        && refined.converged;
    report(1, pass, format!("series={series} refinement={r} depth_used={}", refined.depth_used));
    assert!(pass);
}

#[test]
fn criterion_02_q_coefficients() {
    let mut mismatches = Vec::new();
    for m in 6..=20u32 {
        let mask = (1u128 << m) - 1;
        let members: Vec<u128> =
            (0..=mask).filter(|&v| v < u128::from(m) && !hits(v, 5, m - 1)).collect();
        let q_direct = u8::from(!members.is_empty());
        let per_residue_ok = (0..=mask).all(|v| {
            let r = Residue::new(m, v).unwrap();
            member_family(&r, SetFamily::Bm(m)).unwrap().is_in() == members.contains(&v)
        });
        if q_direct != q_coefficient(m) || !per_residue_ok {
            mismatches.push(m);
        }
    }
    let pass = mismatches.is_empty();
    report(2, pass, format!("m=6..20 mismatches={mismatches:?}"));
    assert!(pass);
}

#[test]
fn criterion_03_word_count_bound() {
    let t = table();
    let row = check_word_count(t, 64).unwrap();
    let over: Vec<usize> = [8, 16, 32, 64].iter().map(|&d| t.count(Side::Over, d).unwrap()).collect();
    report(
        3,
        row.pass,
        format!("instances={} worst_margin={} |L+_d| at d=8,16,32,64: {over:?}", row.instances, row.worst_margin),
    );
    assert!(row.pass);
}

#[test]
fn criterion_04_beta_count() {
    let t = table();
    let row = check_beta_count(t, (3, 6)).unwrap();
    let mut by_level = Vec::new();
    for l in 3..=6u32 {
        let bad = t
            .words(Side::Under, 1 << l)
            .unwrap()
            .iter()
            .filter(|w| word_stats(w).0 < l - 1)
            .count();
        by_level.push((l, bad));
    }
    let witness = Word::repeat(odogibbs::coding::Letter::Alpha, 8).unwrap();
    report(
        4,
        row.violations == 0,
        format!(
            "violations={} per level {by_level:?}; {witness} in L- = {}",
            row.violations,
            t.in_side(&witness, Side::Under).unwrap()
        ),
    );
    assert_eq!(row.violations, 0);
}

#[test]
fn criterion_05_birkhoff_word_bound() {
    let t = table();
    let p = PotentialParams::default();
    let six = check_birkhoff_bound(t, 64, 6.0, "exist2", &p).unwrap();
    let four = check_birkhoff_bound(t, 64, 4.0, "exist2_plus4", &p).unwrap();
    report(
        5,
        six.violations == 0,
        format!(
            "instances={} violations={} worst_margin={:.4}; +4 variant violations={}",
            six.instances, six.violations, six.worst_margin, four.violations
        ),
    );
    assert_eq!(six.violations, 0);
}

#[test]
fn criterion_06_qnl_bound() {
    let p = PotentialParams::default();
    let q = qnl_table(16, table(), Side::Under, &p).unwrap();
    let mb = mu_beta().lo().to_f64_down();
    let ln2 = RealInterval::point(2.0).ln().unwrap();
    let mut violations = Vec::new();
    let mut checked = 0;
    for n in 1..=16usize {
        for l in 1..=n {
            let log_bound = ln2.scale(-(l as f64)).sub(&RealInterval::point(mb).scale(2.0 * n as f64));
            let bound_lo = log_bound.exp().unwrap().lo();
            checked += 1;
            if q[l][n].hi() > bound_lo {
                violations.push((n, l));
            }
        }
    }
    report(6, violations.is_empty(), format!("pairs={checked} violations={violations:?}"));
    assert!(violations.is_empty());
}

#[test]
fn criterion_07_partition_sum_trend() {
    let p = PotentialParams::default();
    let mb = mu_beta().lo().to_f64_down();
    let trend = qn_trend(1, 16, 16, table(), &p).unwrap();
    let bound_ok = trend.iter().all(|r| {
        let b = RealInterval::point(36.0 - 2.0 * mb * r.n as f64).exp().unwrap().scale(2.0);
        r.qn.hi() <= b.lo()
    });
    let rates: Vec<(usize, f64)> = trend.iter().filter(|r| r.n >= 8).map(|r| (r.n, r.rate.mid())).collect();
    let rises: Vec<(usize, f64)> =
        rates.windows(2).filter(|w| w[1].1 > w[0].1 + 0.05).map(|w| (w[1].0, w[1].1 - w[0].1)).collect();
    let pass = bound_ok && rises.is_empty();
    let shown: Vec<String> = rates.iter().map(|(n, r)| format!("{n}:{r:.4}")).collect();
    report(
        7,
        pass,
        format!("bound_ok={bound_ok} (1/n)log Q_n = [{}] rises beyond slack={rises:?}", shown.join(" ")),
    );
    assert!(pass);
}

#[test]
fn criterion_08_gibbs_ratio_at_fixed_point() {
    let p = PotentialParams::default();
    let mut bad = Vec::new();
    let mut worst = f64::INFINITY;
    for n in 5..=20 {
        let g = gibbs_ratio_at_o(n, table(), &p).unwrap();
        worst = worst.min(g.ratio.lo() / g.threshold.hi());
        if !(g.satisfied && g.beats_uniform) {
            bad.push(n);
        }
    }
    report(8, bad.is_empty(), format!("n=5..20 failing={bad:?} smallest ratio/threshold={worst:.3}"));
    assert!(bad.is_empty());
}

#[test]
fn criterion_09_orbit_blocks() {
    let ks: Vec<u32> = (5..=10).collect();
    let mut freq_bad = 0;
    let mut claim_bad = 0;
    let mut unnormalized = 0;
    let mut blocks = 0;
    for s in sample_seeds(2024, 100) {
        for rep in orbit_profile(&sample_point(s), &ks, 1 << 20).unwrap() {
            if rep.offset.is_none() {
                unnormalized += 1;
            }
            blocks += rep.blocks.len();
            freq_bad += rep.frequency_violations();
            claim_bad += rep.claim_violations();
        }
    }
    let pass = freq_bad == 0 && claim_bad == 0 && unnormalized == 0;
    report(
        9,
        pass,
        format!("samples=100 k=5..10 blocks={blocks} frequency_violations={freq_bad} claim_violations={claim_bad} unnormalized={unnormalized}"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_very_weak_scan() {
    let scan = very_weak_scan(100, &[16, 32], 2024, &PotentialParams::default()).unwrap();
    let m16 = scan.median_abs_rate(16).unwrap_or(f64::NAN);
    let m32 = scan.median_abs_rate(32).unwrap_or(f64::NAN);
    let frac = scan.fraction_decreasing(16, 32);
    let rate = scan.discard_rate();
    let pass = m32 < m16 && frac >= 0.9 && rate < 0.05;
    report(
        10,
        pass,
        format!("median |rate| n=16: {m16:.4} n=32: {m32:.4}; decreasing fraction={frac:.2}; discard rate={rate:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_orbit_frequencies() {
    let steps = 1usize << 16;
    let tol = DyadicRational::pow2(-30);
    let mut words = Vec::new();
    for len in [2usize, 3] {
        for bits in 0..(1u64 << len) {
            let w = Word::from_bits(bits, len).unwrap();
            let mu = mu_cylinder(&w, &tol, 64).unwrap().interval.to_real();
            words.push((w, mu));
        }
    }
    let mut outside = Vec::new();
    let mut discarded = 0;
    for s in sample_seeds(2024, 20) {
        let x = sample_point(s);
        for (w, mu) in &words {
            let Some(f) = birkhoff_frequency(&x, w, steps).unwrap() else {
                discarded += 1;
                continue;
            };
            let p = mu.mid();
            let se = (p * (1.0 - p) / steps as f64).sqrt();
            if f < mu.lo() - 3.0 * se || f > mu.hi() + 3.0 * se {
                outside.push((s, w.to_string(), f));
            }
        }
    }
    let pass = outside.is_empty() && discarded == 0;
    report(11, pass, format!("samples=20 words=12 outside={outside:?} discarded={discarded}"));
    assert!(pass);
}
