use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::likelihood::{PriorSpec, RamseyLikelihood, Theta};
use crate::error::{Error, Result};
use crate::units::khz_to_angular;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_in_fraction: f64,
    pub thinning: usize,
    /// Full width of the uniform random-walk proposal, rad/μs.
    pub proposal_support: [f64; 3],
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iter: 10_000,
            burn_in_fraction: 0.5,
            thinning: 2,
            proposal_support: [khz_to_angular(8.0); 3],
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::InvalidParameter(format!("burn-in fraction {} not in [0, 1)", self.burn_in_fraction)));
        }
        if self.thinning == 0 || self.n_iter == 0 {
            return Err(Error::InvalidParameter("n_iter and thinning must be >= 1".into()));
        }
        if self.proposal_support.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter("proposal supports must be > 0".into()));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_fraction * self.n_iter as f64).floor() as usize
    }

    /// Number of samples kept after burn-in and thinning.
    pub fn retained(&self) -> usize {
        (self.n_iter - self.burn_in()) / self.thinning
    }
}

/// Shape and rate of the conditional `τ_k | θ, D`.
pub fn tau_posterior(prior: &PriorSpec, k: usize, n_residuals: usize, ssr: f64) -> (f64, f64) {
    (prior.gamma_shape[k] + 0.5 * n_residuals as f64, prior.gamma_rate[k] + 0.5 * ssr)
}

/// Exact Gibbs draw of both precisions given the residual sums.
pub fn gibbs_update_tau_from_ssr<R: Rng + ?Sized>(
    ssr: &[f64; 2],
    n_residuals: [usize; 2],
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<[f64; 2]> {
    let mut tau = [0.0; 2];
    for k in 0..2 {
        let (shape, rate) = tau_posterior(prior, k, n_residuals[k], ssr[k]);
        let g = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| Error::Numerical(format!("Gamma({shape}, {rate}) for tau_{k}: {e}")))?;
        tau[k] = g.sample(rng);
    }
    Ok(tau)
}

pub fn gibbs_update_tau<R: Rng + ?Sized>(theta: &Theta, lik: &RamseyLikelihood, prior: &PriorSpec, rng: &mut R) -> Result<[f64; 2]> {
    gibbs_update_tau_from_ssr(&lik.ssr(theta)?, [lik.n_residuals(0), lik.n_residuals(1)], prior, rng)
}

/// `min(1, exp(log_proposed − log_current))`.
pub fn acceptance_probability(log_current: f64, log_proposed: f64) -> f64 {
    if log_proposed == f64::NEG_INFINITY {
        return 0.0;
    }
    (log_proposed - log_current).min(0.0).exp()
}

/// Metropolis decision in log space; consumes one uniform draw unless the
/// move is certainly accepted or rejected.
pub fn metropolis_accept<R: Rng + ?Sized>(log_current: f64, log_proposed: f64, rng: &mut R) -> bool {
    if log_proposed == f64::NEG_INFINITY {
        return false;
    }
    let log_ratio = log_proposed - log_current;
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Uniform proposal on `θ ± r/2`.
pub fn propose<R: Rng + ?Sized>(theta: &Theta, r: &[f64; 3], rng: &mut R) -> Theta {
    std::array::from_fn(|i| theta[i] + r[i] * (rng.random::<f64>() - 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome {
    pub theta: Theta,
    pub ssr: [f64; 2],
    pub accepted: bool,
}

/// One random-walk step given the τ-weighted SSR at the current point.
/// Only `−Σ τ_k SSR_k/2` changes with θ inside the prior box.
pub fn mh_step_cached<R: Rng + ?Sized>(
    theta: &Theta,
    ssr: &[f64; 2],
    tau: &[f64; 2],
    lik: &RamseyLikelihood,
    prior: &PriorSpec,
    r: &[f64; 3],
    rng: &mut R,
) -> Result<MhOutcome> {
    let candidate = propose(theta, r, rng);
    let stay = MhOutcome { theta: *theta, ssr: *ssr, accepted: false };
    if !prior.contains(&candidate) {
        return Ok(stay);
    }
    let ssr_new = lik.ssr(&candidate)?;
    let log_cur = -0.5 * (tau[0] * ssr[0] + tau[1] * ssr[1]);
    let log_new = -0.5 * (tau[0] * ssr_new[0] + tau[1] * ssr_new[1]);
    if metropolis_accept(log_cur, log_new, rng) {
        Ok(MhOutcome { theta: candidate, ssr: ssr_new, accepted: true })
    } else {
        Ok(stay)
    }
}

pub fn mh_step<R: Rng + ?Sized>(
    theta: &Theta,
    tau: &[f64; 2],
    lik: &RamseyLikelihood,
    prior: &PriorSpec,
    r: &[f64; 3],
    rng: &mut R,
) -> Result<(Theta, bool)> {
    if !prior.contains(theta) {
        return Err(Error::InvalidParameter("current theta is outside the prior support".into()));
    }
    let out = mh_step_cached(theta, &lik.ssr(theta)?, tau, lik, prior, r, rng)?;
    Ok((out.theta, out.accepted))
}
