//! Simulation and numerics for the fewest-big-jumps principle of cut-off
//! heavy-tailed sums, plus the lattice-torus random graph it explains.

pub mod cli;
pub mod density;
pub mod error;
pub mod estimate;
pub mod krho;
pub mod quad;
pub mod rare_event;
pub mod rng;
pub mod scheme;
pub mod stats;
pub mod torus;

pub use error::{Error, Result};
