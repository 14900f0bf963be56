//! Every quantitative lemma checked over all enumerated instances.

use odogibbs::language::LanguageTable;
use odogibbs::thermo::{lemma_report, LemmaLimits, PotentialParams};

fn main() -> odogibbs::Result<()> {
    let t = LanguageTable::build(64, LanguageTable::default_depth(64))?;
    let rep = lemma_report(&t, &PotentialParams::default(), &LemmaLimits::default())?;
    println!("{:<14}{:>10}{:>14}{:>12}  pass", "id", "instances", "worst", "violations");
    for r in rep.rows.iter().chain(&rep.diagnostics) {
        println!("{:<14}{:>10}{:>14.4}{:>12}  {}", r.id, r.instances, r.worst_margin, r.violations, r.pass);
    }
    Ok(())
}
