use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::{params_at, PriorSpec, RamseyLikelihood, Theta, THETA_NAMES};
use super::sampler::{gibbs_update_tau_from_ssr, mh_step_cached, SamplerConfig};
use crate::error::{Error, Result};
use crate::io::data::csv_error;
use crate::protocol::{simulate, PopulationSeries, ProtocolConfig};
use crate::units::{angular_to_ghz, angular_to_khz, ghz_to_angular};

pub const CHAIN_HEADER: [&str; 7] = ["m", "omega01_ghz", "omega12_plus_ghz", "omega12_minus_ghz", "tau0", "tau1", "accepted"];
pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSample {
    /// 1-based iteration that produced the sample.
    pub m: usize,
    pub theta: Theta,
    pub tau: [f64; 2],
    pub accepted: bool,
}

/// Retained samples of a Metropolis-within-Gibbs run.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<ChainSample>,
    /// Accepted fraction of all post-burn-in proposals.
    pub acceptance_rate: f64,
    pub proposals: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn theta_samples(&self) -> Vec<Theta> {
        self.samples.iter().map(|s| s.theta).collect()
    }

    pub fn tau_samples(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    /// Values of coordinate `i` over the chain.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta[i]).collect()
    }

    /// CSV with one row per retained sample, `θ` in GHz, preceded by a
    /// `# acceptance_rate <r> proposals <n>` line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "# acceptance_rate {} proposals {}", self.acceptance_rate, self.proposals).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(CHAIN_HEADER).map_err(|e| csv_error(path, e))?;
        for s in &self.samples {
            let mut row = vec![s.m.to_string()];
            row.extend(s.theta.iter().map(|&v| angular_to_ghz(v).to_string()));
            row.extend(s.tau.iter().map(|v| v.to_string()));
            row.push(u8::from(s.accepted).to_string());
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (first, body) = text.split_once('\n').ok_or_else(|| Error::parse(path, "empty chain file"))?;
        let fields: Vec<&str> = first.split_whitespace().collect();
        let (acceptance_rate, proposals) = match fields.as_slice() {
            ["#", "acceptance_rate", r, "proposals", n] => (
                r.parse::<f64>().map_err(|e| Error::parse(path, e))?,
                n.parse::<usize>().map_err(|e| Error::parse(path, e))?,
            ),
            _ => return Err(Error::parse(path, "missing acceptance-rate line")),
        };
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        if header.iter().ne(CHAIN_HEADER) {
            return Err(Error::parse(path, format!("expected header {}", CHAIN_HEADER.join(","))));
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let num = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| Error::parse(path, format!("column {}: {e}", CHAIN_HEADER[i])));
            let m = rec[0].trim().parse::<usize>().map_err(|e| Error::parse(path, e))?;
            let accepted = match rec[6].trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(path, format!("accepted must be 0 or 1, got {other:?}"))),
            };
            samples.push(ChainSample {
                m,
                theta: [ghz_to_angular(num(1)?), ghz_to_angular(num(2)?), ghz_to_angular(num(3)?)],
                tau: [num(4)?, num(5)?],
                accepted,
            });
        }
        Ok(Self { samples, acceptance_rate, proposals })
    }
}

/// Metropolis-Hastings-within-Gibbs: each iteration draws `τ | θ` exactly,
/// then moves `θ` by one random-walk step at the new `τ`. `theta0` defaults
/// to the prior centre, `tau0` to the reciprocal residual variance at
/// `theta0`.
pub fn run_chain(
    lik: &RamseyLikelihood,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    theta0: Option<Theta>,
    tau0: Option<[f64; 2]>,
) -> Result<Chain> {
    prior.validate()?;
    cfg.validate()?;
    let theta0 = theta0.unwrap_or_else(|| prior.center());
    if !prior.contains(&theta0) {
        return Err(Error::InvalidParameter("initial theta is outside the prior support".into()));
    }
    let n_res = [lik.n_residuals(0), lik.n_residuals(1)];
    let mut ssr = lik.ssr(&theta0)?;
    let mut tau = tau0.unwrap_or_else(|| [0, 1].map(|k| n_res[k] as f64 / ssr[k].max(f64::MIN_POSITIVE)));
    if tau.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial precisions must be > 0, got {tau:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let burn_in = cfg.burn_in();
    let mut theta = theta0;
    let mut samples = Vec::with_capacity(cfg.retained());
    let mut accepted_count = 0usize;
    for m in 0..cfg.n_iter {
        let fail = |e: Error| Error::Numerical(format!("iteration {}: {e}", m + 1));
        tau = gibbs_update_tau_from_ssr(&ssr, n_res, prior, &mut rng).map_err(fail)?;
        let step = mh_step_cached(&theta, &ssr, &tau, lik, prior, &cfg.proposal_support, &mut rng).map_err(fail)?;
        theta = step.theta;
        ssr = step.ssr;
        if m >= burn_in {
            accepted_count += usize::from(step.accepted);
            if (m - burn_in + 1) % cfg.thinning == 0 {
                samples.push(ChainSample { m: m + 1, theta, tau, accepted: step.accepted });
            }
        }
    }
    let proposals = cfg.n_iter - burn_in;
    Ok(Chain { samples, acceptance_rate: accepted_count as f64 / proposals as f64, proposals })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean_ghz: f64,
    pub sd_khz: f64,
    pub range_khz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub samples: usize,
    pub acceptance_rate: f64,
}

/// Mean, S.D. (denominator `M − 1`, zero for one sample) and range.
pub fn mean_sd_range(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::InsufficientData("empty chain".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok((mean, var.sqrt(), hi - lo))
}

pub fn summarize(chain: &Chain) -> Result<PosteriorSummary> {
    let mut params = Vec::with_capacity(3);
    for (i, name) in THETA_NAMES.iter().enumerate() {
        let (mean, sd, range) = mean_sd_range(&chain.coordinate(i))?;
        params.push(ParamSummary {
            name: name.to_string(),
            mean_ghz: angular_to_ghz(mean),
            sd_khz: angular_to_khz(sd),
            range_khz: angular_to_khz(range),
        });
    }
    Ok(PosteriorSummary { params, samples: chain.len(), acceptance_rate: chain.acceptance_rate })
}

impl PosteriorSummary {
    pub fn table(&self) -> String {
        let mut s = format!("{:<16} {:>14} {:>10} {:>11}\n", "parameter", "mean [GHz]", "S.D. [kHz]", "range [kHz]");
        for p in &self.params {
            s += &format!("{:<16} {:>14.6} {:>10.2} {:>11.2}\n", p.name, p.mean_ghz, p.sd_khz, p.range_khz);
        }
        s += &format!("samples {}  acceptance rate {:.3}\n", self.samples, self.acceptance_rate);
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

/// Equal-width bins over `[min, max]` of each coordinate, edges in GHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub name: String,
    pub edges_ghz: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histograms(chain: &Chain, bins: usize) -> Result<Vec<Histogram>> {
    if chain.is_empty() || bins == 0 {
        return Err(Error::InsufficientData("histogram needs samples and at least one bin".into()));
    }
    let mut out = Vec::with_capacity(3);
    for (i, name) in THETA_NAMES.iter().enumerate() {
        let v: Vec<f64> = chain.coordinate(i).into_iter().map(angular_to_ghz).collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1e-9 };
        let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
        let mut counts = vec![0; bins];
        for x in v {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        out.push(Histogram { name: name.to_string(), edges_ghz: edges, counts });
    }
    Ok(out)
}

/// `parameter,bin,lower_ghz,upper_ghz,count`.
pub fn write_histograms_csv(hists: &[Histogram], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["parameter", "bin", "lower_ghz", "upper_ghz", "count"]).map_err(|e| csv_error(path, e))?;
    for h in hists {
        for (b, c) in h.counts.iter().enumerate() {
            w.write_record([h.name.clone(), b.to_string(), h.edges_ghz[b].to_string(), h.edges_ghz[b + 1].to_string(), c.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_histograms_csv(path: &Path) -> Result<Vec<Histogram>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out: Vec<Histogram> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::parse(path, e));
        let count = rec[4].parse::<usize>().map_err(|e| Error::parse(path, e))?;
        let name = rec[0].to_string();
        if out.last().is_none_or(|h| h.name != name) {
            out.push(Histogram { name, edges_ghz: vec![f(2)?], counts: Vec::new() });
        }
        let h = out.last_mut().expect("pushed above");
        h.edges_ghz.push(f(3)?);
        h.counts.push(count);
    }
    Ok(out)
}

/// Model series of both Ramsey experiments at `n_draws` distinct retained
/// samples chosen uniformly at random.
pub fn posterior_predictive<R: Rng + ?Sized>(
    chain: &Chain,
    n_draws: usize,
    lik: &RamseyLikelihood,
    rng: &mut R,
) -> Result<Vec<[PopulationSeries; 2]>> {
    predictive_with_configs(chain, n_draws, lik.rates(), lik.configs(), rng)
}

pub fn predictive_with_configs<R: Rng + ?Sized>(
    chain: &Chain,
    n_draws: usize,
    rates: &crate::lindblad::DeviceParams,
    configs: &[ProtocolConfig; 2],
    rng: &mut R,
) -> Result<Vec<[PopulationSeries; 2]>> {
    if n_draws > chain.len() {
        return Err(Error::InvalidParameter(format!("{n_draws} draws requested from a chain of {}", chain.len())));
    }
    let idx = sample(rng, chain.len(), n_draws);
    idx.iter()
        .map(|i| {
            let p = params_at(&chain.samples[i].theta, rates)?;
            Ok([simulate(&p, &configs[0])?, simulate(&p, &configs[1])?])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_of(values: &[f64]) -> Chain {
        Chain {
            samples: values
                .iter()
                .enumerate()
                .map(|(m, &v)| ChainSample { m: m + 1, theta: [v; 3], tau: [1.0, 2.0], accepted: m % 2 == 0 })
                .collect(),
            acceptance_rate: 0.5,
            proposals: values.len(),
        }
    }

    #[test]
    fn summary_statistics() {
        let (m, sd, r) = mean_sd_range(&[2.0; 10]).unwrap();
        assert_eq!((m, sd, r), (2.0, 0.0, 0.0));
        let (m, _, r) = mean_sd_range(&[-1.0, 1.0]).unwrap();
        assert_eq!((m, r), (0.0, 2.0));
        assert!(mean_sd_range(&[]).is_err());
        assert!(summarize(&chain_of(&[])).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let c = chain_of(&(0..1000).map(|i| 21000.0 + i as f64 * 1e-3).collect::<Vec<_>>());
        let h = histograms(&c, HISTOGRAM_BINS).unwrap();
        assert_eq!(h.len(), 3);
        assert!(h.iter().all(|h| h.counts.iter().sum::<usize>() == 1000 && h.edges_ghz.len() == 51));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = chain_of(&[21668.1, 21668.3, 20359.9]);
        let path = dir.path().join("chain.csv");
        c.write_csv(&path).unwrap();
        let back = Chain::read_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.acceptance_rate, c.acceptance_rate);
        for (a, b) in c.samples.iter().zip(&back.samples) {
            assert_eq!((a.m, a.tau, a.accepted), (b.m, b.tau, b.accepted));
            for i in 0..3 {
                assert!((a.theta[i] - b.theta[i]).abs() <= 1e-15 * a.theta[i].abs());
            }
        }
        let hpath = dir.path().join("h.csv");
        let h = histograms(&c, 5).unwrap();
        write_histograms_csv(&h, &hpath).unwrap();
        assert_eq!(read_histograms_csv(&hpath).unwrap(), h);
    }
}
