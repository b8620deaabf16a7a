//! Synthetic data: model populations plus i.i.d. additive Gaussian noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::data::{DataMeta, ExperimentData};
use crate::error::{Error, Result};
use crate::lindblad::DeviceParams;
use crate::protocol::{simulate, ProtocolConfig};
use crate::units::angular_to_ghz;

/// `P_n(t_j) = P̂_n(t_j; θ) + N(0, σₑ²)` for each protocol, left unclamped.
/// Noise is drawn experiment by experiment, row by row, in time order.
pub fn generate_synthetic<R: Rng + ?Sized>(
    theta: &DeviceParams,
    configs: &[ProtocolConfig],
    sigma: &[f64],
    rng: &mut R,
) -> Result<Vec<ExperimentData>> {
    if sigma.len() != configs.len() {
        return Err(Error::InvalidParameter(format!("{} noise levels for {} experiments", sigma.len(), configs.len())));
    }
    let mut out = Vec::with_capacity(configs.len());
    for (cfg, &s) in configs.iter().zip(sigma) {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("noise S.D. must be >= 0, got {s}")));
        }
        let mut series = simulate(theta, cfg)?;
        if s > 0.0 {
            let noise = Normal::new(0.0, s).expect("finite positive S.D.");
            for row in series.pops.iter_mut() {
                for v in row.iter_mut() {
                    *v += noise.sample(rng);
                }
            }
        }
        let meta = DataMeta::synthetic(cfg.omega_d.map(angular_to_ghz), s);
        out.push(ExperimentData::from_series(series, cfg.dt, meta)?);
    }
    Ok(out)
}
