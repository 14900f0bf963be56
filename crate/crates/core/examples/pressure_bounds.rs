//! Pressure enclosure against partition sums Q_n and Q_n^l.

use odogibbs::language::{LanguageTable, Side};
use odogibbs::thermo::{mu_beta, pressure, qn_trend, qnl_table, PotentialParams};

fn main() -> odogibbs::Result<()> {
    let params = PotentialParams::default();
    let t = LanguageTable::build(64, LanguageTable::default_depth(64))?;
    println!("P(psi) in {}", pressure(&params, 64)?);

    for row in qn_trend(4, 14, 16, &t, &params)? {
        println!("n={:2}  Q_n={}  (1/n)log Q_n={:.4}", row.n, row.qn, row.rate.mid());
    }

    let mb = mu_beta().lo().to_f64();
    let q = qnl_table(12, &t, Side::Under, &params)?;
    for l in [1, 2, 4, 8] {
        let bound = 0.5f64.powi(l as i32) * (-2.0 * mb * 12.0).exp();
        println!("Q_12^{l} <= {:.3e}   (1/2)^l e^(-2 mu n) = {bound:.3e}", q[l][12].hi());
    }
    Ok(())
}
