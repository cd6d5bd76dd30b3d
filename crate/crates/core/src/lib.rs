//! Random conformant-planning instances and the phase transition of
//! one-step plan modification.
//!
//! - [`model`]: states, belief states, operators and plan validation.
//! - [`generate`]: the variable and fixed random instance models.
//! - [`bounds`]: analytic solvability thresholds.
//! - [`modify`]: delta classification, chains and plan repair.
//! - [`oracle`]: brute-force reference planner and enumerations.
//! - [`experiment`]: Monte Carlo density sweeps.
//! - [`cli`]: the `planmod` command line and file formats.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod model;
pub mod modify;
pub mod oracle;

pub use error::{Error, Result};
