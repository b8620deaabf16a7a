//! Characterization of superconducting qudits from Ramsey and energy-decay
//! population data with a parity-averaged Lindblad model.

pub mod bayes;
pub mod cli;
pub mod error;
pub mod fit;
pub mod io;
pub mod lindblad;
pub mod protocol;
pub mod readout;
pub mod units;

pub use error::{Error, Result};
