//! Deterministic characterization: box-constrained least squares of the
//! Lindblad model against all four experiments, solved by L-BFGS on a
//! sequence of log-barrier problems.

pub mod init;
pub mod lbfgs;
pub mod objective;
pub mod space;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use init::{clamp_interior, initialize_from_fft, log_linear_rate};
pub use lbfgs::{minimize, LbfgsOptions, LbfgsOutcome};
pub use objective::{finite_difference_gradient, gradient, objective, sum_squared_residuals, Objective};
pub use space::{log_barrier, Interval, ParamBounds, Point, N_PARAMS, PARAM_NAMES};

use crate::error::{Error, Result};
use crate::io::ExperimentData;
use crate::lindblad::DeviceParams;
use crate::protocol::ProtocolKind;
use crate::units::{angular_to_ghz, rate_to_khz};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub stages: usize,
    /// `μ₀ = mu0_factor · J(init)`.
    pub mu0_factor: f64,
    pub mu_decrease: f64,
    pub mu_min: f64,
    pub memory: usize,
    /// L-BFGS iteration cap per barrier stage.
    pub max_iter: usize,
    pub gtol: f64,
    /// Grid step (kHz) of the frequency scan run before the barrier stages;
    /// `None` starts L-BFGS directly from `init`.
    pub scan_step_khz: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            stages: 6,
            mu0_factor: 1e-2,
            mu_decrease: 10.0,
            mu_min: 1e-12,
            memory: 10,
            max_iter: 200,
            gtol: 1e-8,
            scan_step_khz: Some(20.0),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 || self.memory == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter("fit stages, memory and max_iter must be >= 1".into()));
        }
        if !(self.mu0_factor >= 0.0) || !(self.mu_decrease > 1.0) || !(self.mu_min >= 0.0) || !(self.gtol > 0.0) {
            return Err(Error::InvalidParameter("invalid barrier schedule or tolerance".into()));
        }
        if let Some(s) = self.scan_step_khz {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!("scan step must be > 0 kHz, got {s}")));
            }
        }
        Ok(())
    }

    fn lbfgs(&self) -> LbfgsOptions {
        LbfgsOptions { memory: self.memory, max_iter: self.max_iter, gtol: self.gtol, ..LbfgsOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub objective: Objective,
    pub bounds: ParamBounds,
    pub init: DeviceParams,
    pub options: FitOptions,
}

impl FitProblem {
    pub fn new(data: Vec<ExperimentData>, bounds: ParamBounds, init: DeviceParams) -> Result<Self> {
        Ok(Self { objective: Objective::new(data)?, bounds, init, options: FitOptions::default() })
    }

    /// Problem started from the FFT/decay-slope initializer.
    pub fn from_data(data: Vec<ExperimentData>, bounds: ParamBounds) -> Result<Self> {
        let init = initialize_from_fft(&data, &bounds)?;
        Self::new(data, bounds, init)
    }

    pub fn with_options(mut self, options: FitOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.options.validate()?;
        if !self.bounds.contains_strictly(&self.init) {
            return Err(Error::InvalidParameter("initial parameters are not strictly inside the bounds".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorm {
    pub kind: ProtocolKind,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: DeviceParams,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norms: Vec<ResidualNorm>,
    /// `J` at the end of each barrier stage.
    pub stage_objectives: Vec<f64>,
    /// Start point handed to the first barrier stage.
    pub start: DeviceParams,
}

/// Outcome of [`barrier_minimize`].
#[derive(Debug, Clone)]
pub struct BarrierOutcome {
    pub x: Point,
    pub iterations: usize,
    pub converged: bool,
    /// `(μ, f(x))` after each stage.
    pub stages: Vec<(f64, f64)>,
}

/// Minimizes `f + μB` over the open box `(lo, hi)` for a geometric sequence
/// of `μ`, warm-starting each stage from the previous one. `f` returns the
/// value and gradient.
pub fn barrier_minimize<F>(f: F, x0: Point, lo: &Point, hi: &Point, opts: &FitOptions) -> Result<BarrierOutcome>
where
    F: Fn(&Point) -> Result<(f64, Point)>,
{
    opts.validate()?;
    if log_barrier(&x0, lo, hi).is_none() {
        return Err(Error::InvalidParameter("start point is not strictly inside the box".into()));
    }
    let (f0, _) = f(&x0)?;
    if !f0.is_finite() {
        return Err(Error::Numerical(format!("objective at start is {f0}")));
    }
    let mut mu = opts.mu0_factor * f0;
    let mut x = x0;
    let mut iterations = 0;
    let mut converged = false;
    let mut stages = Vec::with_capacity(opts.stages);
    for s in 0..opts.stages {
        if s > 0 && mu <= opts.mu_min {
            break;
        }
        let penalized = |y: &Point| -> Result<Option<(f64, Point)>> {
            let Some((b, gb)) = log_barrier(y, lo, hi) else {
                return Ok(None);
            };
            let (v, g) = f(y)?;
            if !v.is_finite() {
                return Err(Error::Numerical(format!("objective is {v} at {y:?}")));
            }
            Ok(Some((v + mu * b, std::array::from_fn(|i| g[i] + mu * gb[i]))))
        };
        let out = minimize(penalized, x, &opts.lbfgs())?;
        x = out.x;
        iterations += out.iterations;
        converged = out.converged;
        stages.push((mu, f(&x)?.0));
        mu /= opts.mu_decrease;
    }
    Ok(BarrierOutcome { x, iterations, converged, stages })
}

/// Grid of scaled coordinates spaced `step` apart strictly inside `(lo, hi)`.
fn scan_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor() as usize;
    let offset = 0.5 * (hi - lo - n as f64 * step);
    (0..=n).map(|k| lo + offset + k as f64 * step).filter(|&v| v > lo && v < hi).collect()
}

fn best_on_grid(points: Vec<Point>, term: impl Fn(&Point) -> Result<f64> + Sync) -> Result<Option<(Point, f64)>> {
    let values: Vec<Result<f64>> = points.par_iter().map(&term).collect();
    let mut best: Option<(Point, f64)> = None;
    for (p, v) in points.into_iter().zip(values) {
        let v = v?;
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((p, v));
        }
    }
    Ok(best)
}

/// Coarse grid search over the frequencies: `ω₀₁` against the 0↔1 Ramsey
/// term, `(ω̄₁₂, ε₁₂)` against the 1↔2 Ramsey term. Each experiment depends
/// on its own frequencies only, so the scans are independent.
pub fn frequency_scan(objective: &Objective, bounds: &ParamBounds, start: &DeviceParams, step_khz: f64) -> Result<DeviceParams> {
    let (lo, hi) = bounds.scaled_bounds();
    let mut x = bounds.to_scaled(start);
    let eval = |e: usize, y: &Point| objective.term(e, &bounds.from_scaled(y, start)?);

    if let Some(e) = objective.index_of(ProtocolKind::Ramsey01) {
        let current = eval(e, &x)?;
        let grid = scan_grid(lo[0], hi[0], step_khz)
            .into_iter()
            .map(|v| {
                let mut y = x;
                y[0] = v;
                y
            })
            .collect();
        if let Some((y, v)) = best_on_grid(grid, |y| eval(e, y))? {
            if v < current {
                x = y;
            }
        }
    }
    if let Some(e) = objective.index_of(ProtocolKind::Ramsey12) {
        let current = eval(e, &x)?;
        let eps = scan_grid(lo[2], hi[2], step_khz);
        let grid = scan_grid(lo[1], hi[1], step_khz)
            .into_iter()
            .flat_map(|b| {
                eps.iter().map(move |&e| {
                    let mut y = x;
                    y[1] = b;
                    y[2] = e;
                    y
                })
            })
            .collect();
        if let Some((y, v)) = best_on_grid(grid, |y| eval(e, y))? {
            if v < current {
                x = y;
            }
        }
    }
    bounds.from_scaled(&x, start)
}

/// Fits the seven parameters; the guard level keeps the values of `init`.
pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let FitProblem { objective, bounds, init, options } = problem;
    let start = match options.scan_step_khz {
        Some(step) => frequency_scan(objective, bounds, init, step)?,
        None => *init,
    };
    let (lo, hi) = bounds.scaled_bounds();
    let value = |y: &Point| objective.value_scaled(bounds, y, init);
    let f = |y: &Point| -> Result<(f64, Point)> {
        let v = value(y)?;
        let g = finite_difference_gradient(value, y, &lo, &hi)?;
        Ok((v, g))
    };
    let out = barrier_minimize(f, bounds.to_scaled(&start), &lo, &hi, options)?;
    let theta_hat = bounds.from_scaled(&out.x, init)?;
    let residual_norms = objective
        .residual_norms(&theta_hat)?
        .into_iter()
        .zip(objective.data())
        .map(|(norm, d)| ResidualNorm { kind: d.kind, norm })
        .collect();
    Ok(FitResult {
        objective_value: objective.value(&theta_hat)?,
        theta_hat,
        iterations: out.iterations,
        converged: out.converged,
        residual_norms,
        stage_objectives: out.stages.iter().map(|s| s.1).collect(),
        start,
    })
}

impl FitResult {
    /// Frequencies (GHz, 6 decimals) and `T₁`/`T₂` times (μs, 2 decimals).
    pub fn table(&self) -> Result<String> {
        let p = &self.theta_hat;
        let (t1, t2) = p.times()?;
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>14}", "parameter", "value");
        for (name, ghz) in [
            ("f01 [GHz]", angular_to_ghz(p.omega01())),
            ("f12+ [GHz]", angular_to_ghz(p.omega12_plus())),
            ("f12- [GHz]", angular_to_ghz(p.omega12_minus())),
        ] {
            let _ = writeln!(s, "{name:<14} {ghz:>14.6}");
        }
        for (name, us) in [("T1,1 [us]", t1[0]), ("T1,2 [us]", t1[1]), ("T2,1 [us]", t2[0]), ("T2,2 [us]", t2[1])] {
            let _ = writeln!(s, "{name:<14} {us:>14.2}");
        }
        let _ = writeln!(s, "{:<14} {:>14.6e}", "J", self.objective_value);
        let _ = writeln!(s, "{:<14} {:>14}", "iterations", self.iterations);
        let _ = writeln!(s, "{:<14} {:>14}", "converged", self.converged);
        Ok(s)
    }

    /// Rates in kHz, in the optimizer's coordinate order.
    pub fn rates_khz(&self) -> [f64; 4] {
        let [g11, g12, _] = self.theta_hat.gamma1();
        let [g21, g22, _] = self.theta_hat.gamma2();
        [g11, g12, g21, g22].map(rate_to_khz)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_recovers_interior_quadratic_minimum() {
        let target = [0.3, -0.2, 0.1, 0.0, 0.45, -0.4, 0.25];
        let f = |x: &Point| -> Result<(f64, Point)> {
            Ok((
                (0..N_PARAMS).map(|i| (x[i] - target[i]).powi(2)).sum(),
                std::array::from_fn(|i| 2.0 * (x[i] - target[i])),
            ))
        };
        let opts = FitOptions { stages: 12, gtol: 1e-12, ..Default::default() };
        let out = barrier_minimize(f, [0.0; N_PARAMS], &[-0.5; N_PARAMS], &[0.5; N_PARAMS], &opts).unwrap();
        for i in 0..N_PARAMS {
            assert!((out.x[i] - target[i]).abs() < 1e-8, "{i}: {}", out.x[i]);
        }
        for w in out.stages.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn scan_grid_is_strictly_interior() {
        let g = scan_grid(-1000.0, 1000.0, 20.0);
        assert_eq!(g.len(), 99);
        assert!(g.iter().all(|&v| v > -1000.0 && v < 1000.0));
        assert!(g.windows(2).all(|w| (w[1] - w[0] - 20.0).abs() < 1e-9));
    }

    #[test]
    fn start_outside_box_is_rejected() {
        let f = |_: &Point| -> Result<(f64, Point)> { Ok((0.0, [0.0; N_PARAMS])) };
        let r = barrier_minimize(f, [1.0; N_PARAMS], &[0.0; N_PARAMS], &[1.0; N_PARAMS], &FitOptions::default());
        assert!(r.is_err());
    }
}
