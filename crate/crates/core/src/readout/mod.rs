//! Readout: Gaussian-mixture state assignment of IQ shots, confusion
//! matrices and SPAM mitigation by inversion.

mod confusion;
mod gmm;
mod shots;

pub use confusion::{average_shots, build_confusion, mitigate, mitigate_shots, ConfusionMatrix, MAX_CONDITION};
pub use gmm::{classify, fit_gmm, fit_gmm_with, Component, EmOptions, GaussianMixture, COMPONENTS, MIN_SHOTS_PER_CLUSTER};
pub use shots::{read_shots_csv, validate_shots, write_shots_csv, IqModel, IqShot};
