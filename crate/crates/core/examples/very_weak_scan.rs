//! Log Gibbs ratios along sampled points, for a few window lengths.

use odogibbs::thermo::{very_weak_scan, PotentialParams};

fn main() -> odogibbs::Result<()> {
    let ns = [8, 16, 32, 48, 64];
    let scan = very_weak_scan(40, &ns, 3, &PotentialParams::default())?;
    for n in ns {
        println!("n={n:2}  median |(1/n) log R_n| = {:.4}", scan.median_abs_rate(n).unwrap_or(f64::NAN));
    }
    println!("n=16 -> 32 decreasing for {:.0}% of samples", 100.0 * scan.fraction_decreasing(16, 32));
    println!("discard rate {:.3}", scan.discard_rate());
    for row in scan.rows.iter().filter(|r| r.sample < 2) {
        println!("sample {} n={:2} {} rate {}", row.sample, row.n, row.word, row.rate);
    }
    Ok(())
}
