//! Rigorous cylinder measures next to a Monte Carlo estimate.

use odogibbs::coding::SetFamily;
use odogibbs::exactnum::DyadicRational;
use odogibbs::measure::{event_measure, family_measures, monte_carlo_cylinder, mu_cylinder, nu_a_series, Polarity, WindowEvent};

fn main() -> odogibbs::Result<()> {
    let tol = DyadicRational::pow2(-24);
    let nu = event_measure(&WindowEvent::single(0, SetFamily::A, Polarity::In), &tol, 40)?;
    println!("nu(A) by refinement: {}  (depth {})", nu.interval.to_real(), nu.depth_used);
    println!("nu(A) by series:     {}", nu_a_series(40)?.to_real());

    for w in ["b", "bb", "bbbbb", "ab", "aba", "abbbbb"] {
        let word = w.parse()?;
        let m = mu_cylinder(&word, &tol, 40)?;
        let mc = monte_carlo_cylinder(&word, 20_000, 1)?;
        println!("mu[{w:>6}] = {}  mc {:.5} +- {:.5}", m.interval.to_real(), mc.estimate, mc.standard_error);
    }

    for row in family_measures(10)? {
        println!(
            "k={:2}  nu(A_k)={}  nu(E_k)<={:.3e}  bound {:.3e}",
            row.k,
            row.nu_a_k,
            row.nu_e_k.interval.hi().to_f64(),
            row.tail_bound.to_f64()
        );
    }
    Ok(())
}
