//! Walk a few points of the odometer and watch carries and κ.

use odogibbs::odometer::{sample_point, Kappa, OdometerPoint};

fn bits(p: &OdometerPoint, n: u64) -> String {
    (0..n).map(|i| if p.bit(i) { '1' } else { '0' }).collect()
}

fn main() -> odogibbs::Result<()> {
    let mut x = OdometerPoint::from_integer(5, true);
    println!("-5 = {}...", bits(&x, 12));
    for _ in 0..6 {
        x = x.step(1)?;
        let k = match x.kappa()? {
            Kappa::Finite(k) => k.to_string(),
            Kappa::Infinite => "inf".into(),
        };
        println!("{}...  DN_8={:3}  kappa={k}", bits(&x, 12), x.dn(8)?);
    }

    // T^-1 undoes T, also across the carry out of a long run of ones
    let ones = OdometerPoint::ones();
    assert_eq!(ones.step(1)?.step(-1)?.residue(64)?, ones.residue(64)?);

    let y = sample_point(42);
    println!("sampled: {}...", bits(&y, 32));
    println!("T^1000:  {}...", bits(&y.step(1000)?, 32));
    Ok(())
}
