use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{sum_squared_residuals, Interval};
use crate::io::ExperimentData;
use crate::lindblad::DeviceParams;
use crate::protocol::{simulate, PopulationSeries, ProtocolConfig, ProtocolKind};
use crate::units::mhz_to_angular;

/// `(ω₀₁, ω⁺₁₂, ω⁻₁₂)` in rad/μs.
pub type Theta = [f64; 3];
pub const THETA_NAMES: [&str; 3] = ["omega01", "omega12_plus", "omega12_minus"];

/// Uniform priors on the three frequencies and `Gamma(α_k, β_k)`
/// (shape, rate) priors on the two precisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub freq_supports: [Interval; 3],
    pub gamma_shape: [f64; 2],
    pub gamma_rate: [f64; 2],
}

impl PriorSpec {
    pub const DEFAULT_GAMMA: f64 = 0.01;

    /// Boxes of `±half_width` around `center`.
    pub fn around(center: &Theta, half_width: f64) -> Self {
        Self {
            freq_supports: center.map(|c| Interval::centered(c, half_width)),
            gamma_shape: [Self::DEFAULT_GAMMA; 2],
            gamma_rate: [Self::DEFAULT_GAMMA; 2],
        }
    }

    /// ±1 MHz around `center`.
    pub fn default_around(center: &Theta) -> Self {
        Self::around(center, mhz_to_angular(1.0))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, iv) in THETA_NAMES.iter().zip(&self.freq_supports) {
            if !(iv.lower < iv.upper) || !iv.lower.is_finite() || !iv.upper.is_finite() {
                return Err(Error::InvalidParameter(format!("{name}: prior support ({}, {}) is empty", iv.lower, iv.upper)));
            }
        }
        if self.gamma_shape.iter().chain(&self.gamma_rate).any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("Gamma prior shape and rate must be > 0".into()));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &Theta) -> bool {
        theta.iter().zip(&self.freq_supports).all(|(&v, iv)| v >= iv.lower && v <= iv.upper)
    }

    pub fn center(&self) -> Theta {
        self.freq_supports.map(|iv| iv.center())
    }
}

/// `θ` of a parameter set.
pub fn theta_of(p: &DeviceParams) -> Theta {
    [p.omega01(), p.omega12_plus(), p.omega12_minus()]
}

/// Device parameters with frequencies `θ` and everything else from `rates`.
/// The parity-averaged model is symmetric in `ω⁺ ↔ ω⁻`, so an unordered
/// pair is stored sorted.
pub fn params_at(theta: &Theta, rates: &DeviceParams) -> Result<DeviceParams> {
    let (hi, lo) = if theta[1] >= theta[2] { (theta[1], theta[2]) } else { (theta[2], theta[1]) };
    rates.with_frequencies(theta[0], hi, lo)
}

/// The two Ramsey data sets with decoherence rates held at fixed values.
#[derive(Debug, Clone)]
pub struct RamseyLikelihood {
    data: [ExperimentData; 2],
    configs: [ProtocolConfig; 2],
    rates: DeviceParams,
    include_j0: bool,
}

impl RamseyLikelihood {
    /// `data` must contain one 0↔1 and one 1↔2 Ramsey series; `rates`
    /// supplies the frozen decoherence rates (and guard level).
    pub fn new(data: &[ExperimentData], rates: DeviceParams) -> Result<Self> {
        let pick = |kind: ProtocolKind| -> Result<ExperimentData> {
            let d = data
                .iter()
                .find(|d| d.kind == kind)
                .cloned()
                .ok_or_else(|| Error::InvalidData(format!("no {kind} series in the data")))?;
            d.validate()?;
            Ok(d)
        };
        let data = [pick(ProtocolKind::Ramsey01)?, pick(ProtocolKind::Ramsey12)?];
        let configs = [data[0].protocol_config(), data[1].protocol_config()];
        Ok(Self { data, configs, rates, include_j0: false })
    }

    /// Includes `t₀ = 0` in the residual sums.
    pub fn with_j0(mut self, include_j0: bool) -> Self {
        self.include_j0 = include_j0;
        self
    }

    pub fn rates(&self) -> &DeviceParams {
        &self.rates
    }

    pub fn configs(&self) -> &[ProtocolConfig; 2] {
        &self.configs
    }

    pub fn data(&self) -> &[ExperimentData; 2] {
        &self.data
    }

    fn first_index(&self) -> usize {
        usize::from(!self.include_j0)
    }

    /// Number of residuals in experiment `k`: `3N_T` by default.
    pub fn n_residuals(&self, k: usize) -> usize {
        let n = self.data[k].times.len() - self.first_index();
        self.data[k].pops.len() * n
    }

    pub fn model(&self, theta: &Theta) -> Result<[PopulationSeries; 2]> {
        let p = params_at(theta, &self.rates)?;
        Ok([simulate(&p, &self.configs[0])?, simulate(&p, &self.configs[1])?])
    }

    /// `SSR_k(θ)` for both experiments.
    pub fn ssr(&self, theta: &Theta) -> Result<[f64; 2]> {
        let model = self.model(theta)?;
        let first = self.first_index();
        let s = [0, 1].map(|k| sum_squared_residuals(&model[k], &self.data[k], first));
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite residuals at theta = {theta:?}")));
        }
        Ok(s)
    }

    /// Log-likelihood up to a θ- and τ-independent constant, from given SSRs.
    pub fn log_likelihood_from_ssr(&self, tau: &[f64; 2], ssr: &[f64; 2]) -> Result<f64> {
        if tau.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("precisions must be > 0, got {tau:?}")));
        }
        Ok((0..2).map(|k| 0.5 * self.n_residuals(k) as f64 * tau[k].ln() - 0.5 * tau[k] * ssr[k]).sum())
    }
}

/// `log Pr(D | θ, τ) = const + Σ_k [(n_k/2) log τ_k − τ_k SSR_k(θ)/2]`.
pub fn log_likelihood(theta: &Theta, tau: &[f64; 2], lik: &RamseyLikelihood) -> Result<f64> {
    if tau.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(format!("precisions must be > 0, got {tau:?}")));
    }
    lik.log_likelihood_from_ssr(tau, &lik.ssr(theta)?)
}
