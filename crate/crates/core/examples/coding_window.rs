//! The coding Φ: a letter β whenever the orbit point lies in A.

use odogibbs::coding::{member_family, phi_window, q_coefficient, Membership, SetFamily};
use odogibbs::odometer::{sample_point, Residue};

fn main() -> odogibbs::Result<()> {
    let r = sample_point(7).residue(64)?;
    let window = phi_window(&r, -8, 40)?;
    let word: String = window.iter().map(|(l, _)| l.to_char()).collect();
    println!("Phi(x)_-8..40 = {word}");
    let open = window.iter().filter(|(_, m)| !m.is_in()).map(|(_, m)| m.mass().to_f64()).fold(0.0, f64::max);
    println!("largest open mass among alpha letters: {open:e}");

    // Membership at a shallow residue is only partly decided.
    let shallow = Residue::new(6, 40)?;
    for set in [SetFamily::A, SetFamily::Ak(6), SetFamily::Ek(6), SetFamily::Bm(7)] {
        match member_family(&shallow, set)? {
            Membership::In => println!("{set}: in"),
            Membership::Possibly(m) if m.is_zero() => println!("{set}: out"),
            Membership::Possibly(m) => println!("{set}: possibly, mass <= {m}"),
        }
    }

    let q: String = (6..=64).map(|m| char::from(b'0' + q_coefficient(m))).collect();
    println!("q_6..q_64 = {q}");
    Ok(())
}
