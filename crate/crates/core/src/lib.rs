//! Exact enumeration and rigorous interval bounds for an odometer-coded
//! subshift over `{α, β}` and the potential `ψ = ψ₀ + ψ₁` on it.
//!
//! The building blocks, bottom up:
//!
//! - [`exactnum`]: dyadic rationals and outward-rounded intervals.
//! - [`odometer`]: the adding machine `x ↦ x + 1` on 2-adic integers.
//! - [`coding`]: the set `A` and its relatives, and the letter map.
//! - [`language`]: words of the coded subshift, with sound bounds.
//! - [`measure`]: enclosures of `ν`-probabilities of window events.
//! - [`thermo`]: the potential, partition sums, pressure and Gibbs ratios.
//! - [`cli`]: the command surface used by the `odogibbs` binary.
//!
//! Runnable walkthroughs live under `examples/`.

pub mod cli;
pub mod coding;
pub mod error;
pub mod exactnum;
pub mod language;
pub mod measure;
pub mod odometer;
pub mod thermo;

pub use error::{Direction, Error, Result};
pub use exactnum::{DyadicInterval, DyadicRational, RealInterval};
