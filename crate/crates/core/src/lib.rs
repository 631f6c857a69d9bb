//! Chaotic time-series toolkit.
//!
//! The pipeline reconstructs a phase-space trajectory from sampled data
//! ([`psr`]), memorizes it with a polynomial-projection state space
//! recurrence ([`polyproj`], [`scan`]), splits the memory into nested
//! piecewise-polynomial spaces ([`multiwavelet`]) and evolves each scale
//! forward with attractor-aware linear operators ([`evolution`]).
//! [`forecaster`] wires the stages together and fits every learned map in
//! closed form by ridge regression.
//!
//! [`chaos_sim`] and [`lyapunov`] provide ground-truth chaotic systems and
//! chaoticity diagnostics.

pub mod chaos_sim;
pub mod error;
pub mod evolution;
pub mod forecaster;
pub mod linalg;
pub mod lyapunov;
pub mod multiwavelet;
pub mod polyproj;
pub mod psr;
pub mod rng;
pub mod scan;
pub mod series;

pub use error::{Error, Result};
pub use series::TimeSeries;
