//! At β^∞ the Gibbs ratio outgrows (e/2)^n.

use odogibbs::language::LanguageTable;
use odogibbs::thermo::{gibbs_ratio_at_o, PotentialParams};

fn main() -> odogibbs::Result<()> {
    let t = LanguageTable::build(16, LanguageTable::default_depth(16))?;
    let params = PotentialParams::default();
    for n in 5..=20 {
        let g = gibbs_ratio_at_o(n, &t, &params)?;
        println!(
            "n={n:2}  ratio>={:.4e}  (e/2)^n<={:.4e}  {}  mu[b^n]>2^-n: {}",
            g.ratio.lo(),
            g.threshold.hi(),
            if g.satisfied { "exceeds" } else { "BELOW" },
            g.beats_uniform
        );
    }
    Ok(())
}
