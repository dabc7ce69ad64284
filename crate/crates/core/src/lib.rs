//! Exact laboratory for the lonely runner problem.
//!
//! * [`circle`]: exact circle arithmetic and the objective `f_D`.
//! * [`kappa`]: exact `kappa(D)` with witnesses, a grid oracle and a
//!   threshold mode.
//! * [`independence`]: L-independence in `Z_p` and the counting bounds that
//!   make random sets independent.
//! * [`fourier`]: the Fourier-analytic certificate `kappa(D) >= 1/2 - eps`
//!   for L-independent sets.
//! * [`experiments`]: seeded Monte Carlo surveys and record persistence.
//! * [`graph`]: colorings of integer distance graphs induced by a witness.

pub mod arith;
pub mod circle;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod graph;
pub mod independence;
pub mod kappa;
pub mod rational;

pub use circle::{
    circ_dist, conjectured_bound, known_lower_bound, min_circ_dist, normalize, SpeedSet,
};
pub use error::{Error, Result};
pub use kappa::{kappa_at_least, kappa_exact, kappa_grid, KappaResult, ThresholdResult};
pub use rational::Rational;
