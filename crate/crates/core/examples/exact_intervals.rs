//! Dyadic rationals are exact; real intervals round outward.

use odogibbs::exactnum::{dyadic_arith, DyadicInterval, DyadicOp, DyadicRational, RealInterval};

fn main() -> odogibbs::Result<()> {
    let a: DyadicRational = "5*2^-5".parse()?;
    let b: DyadicRational = "1/2^6".parse()?;
    println!("{a} + {b} = {}", &a + &b);
    println!("{:?}", dyadic_arith(&a, &b, DyadicOp::Mul));

    let i = DyadicInterval::new(a.clone(), &a + &b)?;
    println!("{i} has width {}", i.width());

    let x = RealInterval::new(-0.75, -0.5)?;
    println!("exp{x} = {}", x.exp()?);
    println!("sqrt 2 in {}", RealInterval::point(2.0).sqrt()?);
    Ok(())
}
