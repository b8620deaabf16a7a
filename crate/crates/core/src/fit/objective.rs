use rayon::prelude::*;

use super::space::{ParamBounds, Point, N_PARAMS};
use crate::error::{Error, Result};
use crate::io::ExperimentData;
use crate::lindblad::DeviceParams;
use crate::protocol::{simulate, PopulationSeries, ProtocolConfig, ProtocolKind};

/// Mismatch `J(θ) = Σₑ Δtₑ Σₙ Σⱼ (P̂ₙ(tⱼ; θ) − Pₙ(tⱼ))²` over a set of
/// experiments.
#[derive(Debug, Clone)]
pub struct Objective {
    data: Vec<ExperimentData>,
    configs: Vec<ProtocolConfig>,
}

/// Sum of squared population residuals from `first` onwards.
pub fn sum_squared_residuals(model: &PopulationSeries, data: &ExperimentData, first: usize) -> f64 {
    model
        .pops
        .iter()
        .zip(&data.pops)
        .map(|(m, d)| m[first..].iter().zip(&d[first..]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum()
}

impl Objective {
    pub fn new(data: Vec<ExperimentData>) -> Result<Self> {
        let configs = data.iter().map(ExperimentData::protocol_config).collect();
        Self::with_configs(data, configs)
    }

    /// Pairs each data set with the protocol used to simulate it.
    pub fn with_configs(data: Vec<ExperimentData>, configs: Vec<ProtocolConfig>) -> Result<Self> {
        if data.len() != configs.len() {
            return Err(Error::InvalidData(format!("{} data sets for {} protocols", data.len(), configs.len())));
        }
        if data.is_empty() {
            return Err(Error::InvalidData("no experiments to fit".into()));
        }
        for (d, c) in data.iter().zip(&configs) {
            d.validate()?;
            c.validate()?;
            if d.kind != c.kind || d.n_steps() != c.n_steps || (d.dt - c.dt).abs() > 1e-12 * c.dt {
                return Err(Error::InvalidData(format!(
                    "{} data grid ({} steps of {} us) does not match protocol {} ({} steps of {} us)",
                    d.kind,
                    d.n_steps(),
                    d.dt,
                    c.kind,
                    c.n_steps,
                    c.dt
                )));
            }
        }
        Ok(Self { data, configs })
    }

    pub fn data(&self) -> &[ExperimentData] {
        &self.data
    }

    pub fn configs(&self) -> &[ProtocolConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn index_of(&self, kind: ProtocolKind) -> Option<usize> {
        self.data.iter().position(|d| d.kind == kind)
    }

    /// Contribution of experiment `e`.
    pub fn term(&self, e: usize, p: &DeviceParams) -> Result<f64> {
        let cfg = &self.configs[e];
        let model = simulate(p, cfg)?;
        Ok(cfg.dt * sum_squared_residuals(&model, &self.data[e], cfg.first_index()))
    }

    pub fn value(&self, p: &DeviceParams) -> Result<f64> {
        let mut total = 0.0;
        for e in 0..self.len() {
            total += self.term(e, p)?;
        }
        if !total.is_finite() {
            return Err(Error::Numerical(format!("objective is {total}")));
        }
        Ok(total)
    }

    /// Root of the unweighted squared residual sum of each experiment.
    pub fn residual_norms(&self, p: &DeviceParams) -> Result<Vec<f64>> {
        self.configs
            .iter()
            .zip(&self.data)
            .map(|(cfg, d)| Ok(sum_squared_residuals(&simulate(p, cfg)?, d, cfg.first_index()).sqrt()))
            .collect()
    }

    pub fn value_scaled(&self, bounds: &ParamBounds, x: &Point, template: &DeviceParams) -> Result<f64> {
        self.value(&bounds.from_scaled(x, template)?)
    }
}

/// `J(θ)` for a set of experiments.
pub fn objective(theta: &DeviceParams, data: &[ExperimentData]) -> Result<f64> {
    Objective::new(data.to_vec())?.value(theta)
}

/// Central-difference gradient of `f` at `x`, step `h_i = 1e-6·max(|x_i|, 1)`
/// shrunk to stay inside `(lo, hi)`.
pub fn finite_difference_gradient<F>(f: F, x: &Point, lo: &Point, hi: &Point) -> Result<Point>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let mut steps = [0.0; N_PARAMS];
    for i in 0..N_PARAMS {
        let room = (x[i] - lo[i]).min(hi[i] - x[i]);
        if !(room > 0.0) {
            return Err(Error::InvalidParameter(format!("coordinate {i} is on or outside its bound")));
        }
        steps[i] = (1e-6 * x[i].abs().max(1.0)).min(0.5 * room);
    }
    let evals: Vec<Result<(f64, f64)>> = (0..N_PARAMS)
        .into_par_iter()
        .map(|i| {
            let mut up = *x;
            let mut down = *x;
            up[i] += steps[i];
            down[i] -= steps[i];
            Ok((f(&up)?, f(&down)?))
        })
        .collect();
    let mut g = [0.0; N_PARAMS];
    for (i, e) in evals.into_iter().enumerate() {
        let (fu, fd) = e?;
        g[i] = (fu - fd) / (2.0 * steps[i]);
    }
    Ok(g)
}

/// Gradient of `J` in the scaled optimizer coordinates.
pub fn gradient(theta: &DeviceParams, objective: &Objective, bounds: &ParamBounds) -> Result<Point> {
    let (lo, hi) = bounds.scaled_bounds();
    let x = bounds.to_scaled(theta);
    finite_difference_gradient(|y| objective.value_scaled(bounds, y, theta), &x, &lo, &hi)
}
