//! TOML run configuration. Every physical quantity carries its unit in the
//! key name (`_ghz`, `_mhz`, `_khz`, `_us`, `_ns`); unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bayes::{PriorSpec, SamplerConfig, Theta};
use crate::error::{Error, Result};
use crate::fit::{FitOptions, Interval, ParamBounds};
use crate::lindblad::{rates_from_times, DeviceParams};
use crate::protocol::{ProtocolConfig, ProtocolKind};
use crate::units::{ghz_to_angular, khz_to_angular, khz_to_rate, mhz_to_angular, ns_to_us};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: PathsConfig,
    pub device: Option<DeviceConfig>,
    #[serde(default)]
    pub protocols: ProtocolsConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub bayes: BayesConfig,
    #[serde(default)]
    pub mitigate: MitigateConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub fit_result: Option<PathBuf>,
}

/// Frequencies as parity branches or as mean and half-splitting; rates as
/// times or directly. Two-element lists give levels 1 and 2, the guard level
/// copying level 2.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub omega01_ghz: f64,
    pub omega12_plus_ghz: Option<f64>,
    pub omega12_minus_ghz: Option<f64>,
    pub omega12_bar_ghz: Option<f64>,
    pub eps12_khz: Option<f64>,
    pub omega23_ghz: Option<f64>,
    pub t1_us: Option<Vec<f64>>,
    pub t2_us: Option<Vec<f64>>,
    pub gamma1_khz: Option<Vec<f64>>,
    pub gamma2_khz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolsConfig {
    pub ramsey01: Option<ProtocolBlock>,
    pub ramsey12: Option<ProtocolBlock>,
    pub decay1: Option<ProtocolBlock>,
    pub decay2: Option<ProtocolBlock>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolBlock {
    pub drive_ghz: Option<f64>,
    pub dt_ns: Option<f64>,
    pub dt_us: Option<f64>,
    pub n_steps: Option<usize>,
    pub include_j0: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Uniform(f64),
    PerExperiment(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub sigma: Option<Sigma>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    Fft,
    Device,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub init: InitMethod,
    pub bounds: Option<BoundsConfig>,
    pub stages: Option<usize>,
    pub mu0_factor: Option<f64>,
    pub mu_decrease: Option<f64>,
    pub memory: Option<usize>,
    pub max_iter: Option<usize>,
    pub gtol: Option<f64>,
    /// `0` disables the frequency scan.
    pub scan_step_khz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub omega01_ghz: [f64; 2],
    pub omega12_bar_ghz: [f64; 2],
    pub eps12_khz: [f64; 2],
    pub gamma1_khz: [[f64; 2]; 2],
    pub gamma21_khz: [f64; 2],
    pub gamma22_khz: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    pub n_iter: Option<usize>,
    pub burn_in_fraction: Option<f64>,
    pub thinning: Option<usize>,
    pub proposal_khz: Option<[f64; 3]>,
    pub seed: Option<u64>,
    pub prior_half_width_mhz: Option<f64>,
    pub gamma_shape: Option<[f64; 2]>,
    pub gamma_rate: Option<[f64; 2]>,
    pub include_j0: Option<bool>,
    pub draws: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigateConfig {
    pub training: Option<PathBuf>,
    pub measured: Option<PathBuf>,
    pub clamp: Option<bool>,
    pub seed: Option<u64>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be a positive number, got {v}")))
    }
}

fn level_pair(name: &str, v: &[f64]) -> Result<[f64; 3]> {
    match v {
        [a, b] => Ok([*a, *b, *b]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(Error::Config(format!("{name} needs 2 or 3 entries, got {}", v.len()))),
    }
}

fn interval(name: &str, v: [f64; 2], to_internal: fn(f64) -> f64) -> Result<Interval> {
    if !(v[0] < v[1]) || !v[0].is_finite() || !v[1].is_finite() {
        return Err(Error::Config(format!("{name}: [{}, {}] is not an interval", v[0], v[1])));
    }
    Ok(Interval::new(to_internal(v[0]), to_internal(v[1])))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Builds every derived object once so that bad values fail before any
    /// computation.
    pub fn validate(&self) -> Result<()> {
        self.device_params()?;
        self.protocol_configs()?;
        self.sigmas(4)?;
        self.bounds()?;
        self.fit_options()?;
        self.sampler_config()?;
        self.prior_half_width()?;
        Ok(())
    }

    /// The configured device, or the reference device when absent.
    pub fn device_params(&self) -> Result<DeviceParams> {
        let Some(d) = &self.device else {
            return Ok(DeviceParams::reference());
        };
        let omega01 = ghz_to_angular(positive("device.omega01_ghz", d.omega01_ghz)?);
        let (plus, minus) = match (d.omega12_plus_ghz, d.omega12_minus_ghz, d.omega12_bar_ghz, d.eps12_khz) {
            (Some(p), Some(m), None, None) => (ghz_to_angular(p), ghz_to_angular(m)),
            (None, None, Some(bar), Some(eps)) => {
                let (bar, eps) = (ghz_to_angular(bar), khz_to_angular(eps));
                (bar + eps, bar - eps)
            }
            _ => {
                return Err(Error::Config(
                    "device: give either omega12_plus_ghz and omega12_minus_ghz, or omega12_bar_ghz and eps12_khz".into(),
                ))
            }
        };
        let (gamma1, gamma2) = match (&d.t1_us, &d.t2_us, &d.gamma1_khz, &d.gamma2_khz) {
            (Some(t1), Some(t2), None, None) => rates_from_times(&level_pair("t1_us", t1)?, &level_pair("t2_us", t2)?)
                .map_err(|e| Error::Config(format!("device: {e}")))?,
            (None, None, Some(g1), Some(g2)) => {
                (level_pair("gamma1_khz", g1)?.map(khz_to_rate), level_pair("gamma2_khz", g2)?.map(khz_to_rate))
            }
            _ => return Err(Error::Config("device: give either t1_us and t2_us, or gamma1_khz and gamma2_khz".into())),
        };
        let omega23 = d.omega23_ghz.map(ghz_to_angular).unwrap_or(plus + minus - omega01);
        DeviceParams::from_parity_frequencies(omega01, plus, minus, omega23, gamma1, gamma2)
            .map_err(|e| Error::Config(format!("device: {e}")))
    }

    fn block(&self, kind: ProtocolKind) -> Option<&ProtocolBlock> {
        let p = &self.protocols;
        match kind {
            ProtocolKind::Ramsey01 => p.ramsey01.as_ref(),
            ProtocolKind::Ramsey12 => p.ramsey12.as_ref(),
            ProtocolKind::Decay1 => p.decay1.as_ref(),
            ProtocolKind::Decay2 => p.decay2.as_ref(),
        }
    }

    /// Configured experiments in canonical order; all four reference
    /// experiments when no protocol block is present.
    pub fn protocol_configs(&self) -> Result<Vec<ProtocolConfig>> {
        let reference = ProtocolConfig::reference_set();
        let any = ProtocolKind::ALL.iter().any(|&k| self.block(k).is_some());
        let mut out = Vec::new();
        for (kind, base) in ProtocolKind::ALL.into_iter().zip(reference) {
            let Some(b) = self.block(kind) else {
                if !any {
                    out.push(base);
                }
                continue;
            };
            let mut cfg = base;
            if let Some(d) = b.drive_ghz {
                if !kind.is_ramsey() {
                    return Err(Error::Config(format!("protocols.{kind}: decay experiments take no drive")));
                }
                cfg.omega_d = Some(ghz_to_angular(positive(&format!("protocols.{kind}.drive_ghz"), d)?));
            }
            cfg.dt = match (b.dt_ns, b.dt_us) {
                (Some(_), Some(_)) => return Err(Error::Config(format!("protocols.{kind}: give dt_ns or dt_us, not both"))),
                (Some(ns), None) => ns_to_us(positive(&format!("protocols.{kind}.dt_ns"), ns)?),
                (None, Some(us)) => positive(&format!("protocols.{kind}.dt_us"), us)?,
                (None, None) => cfg.dt,
            };
            if let Some(n) = b.n_steps {
                cfg.n_steps = n;
            }
            if let Some(j0) = b.include_j0 {
                cfg.include_j0 = j0;
            }
            cfg.validate().map_err(|e| Error::Config(format!("protocols.{kind}: {e}")))?;
            out.push(cfg);
        }
        Ok(out)
    }

    pub fn protocol(&self, kind: ProtocolKind) -> Result<ProtocolConfig> {
        self.protocol_configs()?
            .into_iter()
            .find(|c| c.kind == kind)
            .ok_or_else(|| Error::Config(format!("experiment {kind} is not configured")))
    }

    /// Noise S.D. per experiment (default 0).
    pub fn sigmas(&self, n: usize) -> Result<Vec<f64>> {
        let s = match &self.synth.sigma {
            None => vec![0.0; n],
            Some(Sigma::Uniform(s)) => vec![*s; n],
            Some(Sigma::PerExperiment(v)) if v.len() == n => v.clone(),
            Some(Sigma::PerExperiment(v)) => {
                return Err(Error::Config(format!("synth.sigma has {} entries for {n} experiments", v.len())))
            }
        };
        if s.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("synth.sigma must be >= 0".into()));
        }
        Ok(s)
    }

    pub fn bounds(&self) -> Result<ParamBounds> {
        let Some(b) = &self.fit.bounds else {
            return Ok(ParamBounds::reference());
        };
        let bounds = ParamBounds {
            omega01: interval("omega01_ghz", b.omega01_ghz, ghz_to_angular)?,
            omega12_bar: interval("omega12_bar_ghz", b.omega12_bar_ghz, ghz_to_angular)?,
            eps12: interval("eps12_khz", b.eps12_khz, khz_to_angular)?,
            gamma1: [interval("gamma1_khz[0]", b.gamma1_khz[0], khz_to_rate)?, interval("gamma1_khz[1]", b.gamma1_khz[1], khz_to_rate)?],
            gamma21: interval("gamma21_khz", b.gamma21_khz, khz_to_rate)?,
            gamma22: interval("gamma22_khz", b.gamma22_khz, khz_to_rate)?,
        };
        bounds.validate().map_err(|e| Error::Config(format!("fit.bounds: {e}")))?;
        Ok(bounds)
    }

    pub fn fit_options(&self) -> Result<FitOptions> {
        let f = &self.fit;
        let d = FitOptions::default();
        let o = FitOptions {
            stages: f.stages.unwrap_or(d.stages),
            mu0_factor: f.mu0_factor.unwrap_or(d.mu0_factor),
            mu_decrease: f.mu_decrease.unwrap_or(d.mu_decrease),
            mu_min: d.mu_min,
            memory: f.memory.unwrap_or(d.memory),
            max_iter: f.max_iter.unwrap_or(d.max_iter),
            gtol: f.gtol.unwrap_or(d.gtol),
            scan_step_khz: match f.scan_step_khz {
                Some(s) if s == 0.0 => None,
                Some(s) => Some(s),
                None => d.scan_step_khz,
            },
        };
        o.validate().map_err(|e| Error::Config(format!("fit: {e}")))?;
        Ok(o)
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let b = &self.bayes;
        let d = SamplerConfig::default();
        let c = SamplerConfig {
            n_iter: b.n_iter.unwrap_or(d.n_iter),
            burn_in_fraction: b.burn_in_fraction.unwrap_or(d.burn_in_fraction),
            thinning: b.thinning.unwrap_or(d.thinning),
            proposal_support: b.proposal_khz.map(|r| r.map(khz_to_angular)).unwrap_or(d.proposal_support),
            rng_seed: b.seed.unwrap_or(d.rng_seed),
        };
        c.validate().map_err(|e| Error::Config(format!("bayes: {e}")))?;
        Ok(c)
    }

    fn prior_half_width(&self) -> Result<f64> {
        Ok(mhz_to_angular(positive("bayes.prior_half_width_mhz", self.bayes.prior_half_width_mhz.unwrap_or(1.0))?))
    }

    /// Uniform boxes around `center` plus the Gamma hyper-priors.
    pub fn prior(&self, center: &Theta) -> Result<PriorSpec> {
        let mut p = PriorSpec::around(center, self.prior_half_width()?);
        if let Some(a) = self.bayes.gamma_shape {
            p.gamma_shape = a;
        }
        if let Some(b) = self.bayes.gamma_rate {
            p.gamma_rate = b;
        }
        p.validate().map_err(|e| Error::Config(format!("bayes: {e}")))?;
        Ok(p)
    }
}
