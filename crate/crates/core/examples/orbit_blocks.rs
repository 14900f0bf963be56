//! Blocks O_p = [n_p, n_p + 2^{s_p}) along an orbit and visits to E_k.

use odogibbs::odometer::sample_point;
use odogibbs::thermo::orbit_profile;

fn main() -> odogibbs::Result<()> {
    let x = sample_point(99);
    let reports = orbit_profile(&x, &[5, 6, 7, 8], 1 << 20)?;
    let first = &reports[0];
    println!("normalized after {:?} steps", first.offset);
    for (p, b) in first.blocks.iter().enumerate() {
        let visits: Vec<u64> = reports.iter().map(|r| r.blocks[p].visits).collect();
        println!("p={p:2}  n_p={:8}  s_p={:2}  visits E_5..E_8 {visits:?}", b.n_p, b.s_p);
    }
    for r in &reports {
        println!("k={}  max frequency {:.5} <= h_k {:.5}", r.k, r.max_frequency(), r.h_k());
    }
    Ok(())
}
