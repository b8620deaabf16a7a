//! Bayesian inference of the three transition frequencies by
//! Metropolis-Hastings-within-Gibbs with Gamma priors on the two noise
//! precisions.

mod chain;
mod likelihood;
mod sampler;

pub use chain::{
    histograms, mean_sd_range, posterior_predictive, predictive_with_configs, read_histograms_csv, run_chain, summarize,
    write_histograms_csv, Chain, ChainSample, Histogram, ParamSummary, PosteriorSummary, CHAIN_HEADER, HISTOGRAM_BINS,
};
pub use likelihood::{log_likelihood, params_at, theta_of, PriorSpec, RamseyLikelihood, Theta, THETA_NAMES};
pub use sampler::{
    acceptance_probability, gibbs_update_tau, gibbs_update_tau_from_ssr, metropolis_accept, mh_step, mh_step_cached, propose,
    tau_posterior, MhOutcome, SamplerConfig,
};
