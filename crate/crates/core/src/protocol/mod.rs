//! Ramsey and energy-decay experiments simulated on the Lindblad model.

mod spectrum;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{
    build_superoperator, build_system_hamiltonian, decoherence_operators, rotating_frame_hamiltonian,
    ControlEnvelope, DensityMatrix, DeviceParams, Operator, Parity, Propagator, VecState,
};
use crate::lindblad::{unvectorize, vectorize};
use crate::units::ghz_to_angular;

pub use spectrum::{amplitude_spectrum, fft_amplitude_spectrum, Spectrum};

/// Number of reported (measurable) levels.
pub const MEASURED_LEVELS: usize = 3;

pub const RAMSEY01_DRIVE_GHZ: f64 = 3.4476698;
pub const RAMSEY12_DRIVE_GHZ: f64 = 3.2392576;

const POPULATION_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Ramsey01,
    Ramsey12,
    Decay1,
    Decay2,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] =
        [ProtocolKind::Ramsey01, ProtocolKind::Ramsey12, ProtocolKind::Decay1, ProtocolKind::Decay2];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Ramsey01 => "ramsey01",
            ProtocolKind::Ramsey12 => "ramsey12",
            ProtocolKind::Decay1 => "decay1",
            ProtocolKind::Decay2 => "decay2",
        }
    }

    pub fn is_ramsey(self) -> bool {
        matches!(self, ProtocolKind::Ramsey01 | ProtocolKind::Ramsey12)
    }

    /// Level prepared before the experiment starts.
    pub fn initial_level(self) -> usize {
        match self {
            ProtocolKind::Ramsey01 => 0,
            ProtocolKind::Ramsey12 | ProtocolKind::Decay1 => 1,
            ProtocolKind::Decay2 => 2,
        }
    }

    /// Level whose population carries the signal.
    pub fn signal_level(self) -> usize {
        match self {
            ProtocolKind::Ramsey01 | ProtocolKind::Decay1 => 1,
            ProtocolKind::Ramsey12 | ProtocolKind::Decay2 => 2,
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Drive angular frequency in rad/μs; required for Ramsey experiments.
    pub omega_d: Option<f64>,
    /// Dark-time step in μs.
    pub dt: f64,
    pub n_steps: usize,
    pub include_j0: bool,
}

impl ProtocolConfig {
    pub const RAMSEY_DT: f64 = 0.020;
    pub const RAMSEY_STEPS: usize = 250;
    pub const DECAY_DT: f64 = 0.080;
    pub const DECAY_STEPS: usize = 500;

    pub fn ramsey(kind: ProtocolKind, omega_d: f64) -> Self {
        Self { kind, omega_d: Some(omega_d), dt: Self::RAMSEY_DT, n_steps: Self::RAMSEY_STEPS, include_j0: true }
    }

    pub fn decay(kind: ProtocolKind) -> Self {
        Self { kind, omega_d: None, dt: Self::DECAY_DT, n_steps: Self::DECAY_STEPS, include_j0: true }
    }

    /// The four experiments on their default grids, Ramsey drives at
    /// 3.4476698 GHz (0↔1) and 3.2392576 GHz (1↔2).
    pub fn reference_set() -> [Self; 4] {
        [
            Self::ramsey(ProtocolKind::Ramsey01, ghz_to_angular(RAMSEY01_DRIVE_GHZ)),
            Self::ramsey(ProtocolKind::Ramsey12, ghz_to_angular(RAMSEY12_DRIVE_GHZ)),
            Self::decay(ProtocolKind::Decay1),
            Self::decay(ProtocolKind::Decay2),
        ]
    }

    pub fn with_grid(mut self, dt: f64, n_steps: usize) -> Self {
        self.dt = dt;
        self.n_steps = n_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("{}: dark-time step must be > 0, got {}", self.kind, self.dt)));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidParameter(format!("{}: need at least one dark-time step", self.kind)));
        }
        match (self.kind.is_ramsey(), self.omega_d) {
            (true, None) => Err(Error::InvalidParameter(format!("{}: drive frequency missing", self.kind))),
            (_, Some(w)) if !w.is_finite() => Err(Error::InvalidParameter(format!("{}: drive frequency not finite", self.kind))),
            _ => Ok(()),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| j as f64 * self.dt).collect()
    }

    /// First dark-time index used in sums over the grid.
    pub fn first_index(&self) -> usize {
        usize::from(!self.include_j0)
    }
}

/// Populations of levels 0..=2 on a dark-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSeries {
    pub kind: ProtocolKind,
    pub times: Vec<f64>,
    pub pops: [Vec<f64>; MEASURED_LEVELS],
}

impl PopulationSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.pops[n]
    }

    /// Elementwise mean of two series on the same grid.
    pub fn average(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::InvalidData("averaging series on different grids".into()));
        }
        let pops = std::array::from_fn(|n| {
            self.pops[n].iter().zip(&other.pops[n]).map(|(a, b)| 0.5 * (a + b)).collect()
        });
        Ok(Self { kind: self.kind, times: self.times.clone(), pops })
    }

    fn from_states(kind: ProtocolKind, times: Vec<f64>, states: &[Operator]) -> Result<Self> {
        let mut pops: [Vec<f64>; MEASURED_LEVELS] = std::array::from_fn(|_| Vec::with_capacity(states.len()));
        for (j, rho) in states.iter().enumerate() {
            let tr = rho.trace();
            if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
                return Err(Error::Numerical(format!("{kind}: trace {tr} at dark-time index {j}")));
            }
            for (k, row) in pops.iter_mut().enumerate() {
                let p = rho[(k, k)].re;
                if p < -POPULATION_TOL {
                    return Err(Error::Numerical(format!("{kind}: population {p:.3e} of level {k} at index {j}")));
                }
                row.push(p);
            }
            if rho[(3, 3)].re < -POPULATION_TOL {
                return Err(Error::Numerical(format!("{kind}: negative guard population at index {j}")));
            }
        }
        Ok(Self { kind, times, pops })
    }
}

/// `|level⟩⟨level|` for one of the measured levels.
pub fn ideal_prepare(level: usize) -> Result<DensityMatrix> {
    if level >= MEASURED_LEVELS {
        return Err(Error::Unsupported(format!("preparation of level {level}")));
    }
    DensityMatrix::pure(level)
}

/// Instantaneous `exp(−i(π/4)σₓ)` on the `{|k⟩, |k+1⟩}` block.
pub fn half_pi_unitary(k: usize) -> Result<Operator> {
    if k > 1 {
        return Err(Error::Unsupported(format!("pi/2 rotation on subspace {k}")));
    }
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = Operator::identity();
    u[(k, k)] = C64::new(c, 0.0);
    u[(k + 1, k + 1)] = C64::new(c, 0.0);
    u[(k, k + 1)] = C64::new(0.0, -c);
    u[(k + 1, k)] = C64::new(0.0, -c);
    Ok(u)
}

pub fn apply_half_pi(rho: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    Ok(rho.conjugate_by(&half_pi_unitary(k)?))
}

/// Free-evolution propagator over one dark-time step in the frame rotating
/// at `omega_d`.
fn free_propagator(p: &DeviceParams, parity: Parity, omega_d: f64, dt: f64) -> Result<Propagator> {
    let hs = build_system_hamiltonian(p, parity);
    let h = rotating_frame_hamiltonian(&hs, omega_d, ControlEnvelope::OFF);
    let (l1, l2) = decoherence_operators(p)?;
    Propagator::new(&build_superoperator(&h, &l1, &l2)?, dt)
}

fn evolve_states(v0: VecState, k: &Propagator, steps: usize, pulse: Option<&Operator>) -> Vec<Operator> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut v = v0;
    for j in 0..=steps {
        if j > 0 {
            v = k.apply(&v);
        }
        let rho = unvectorize(&v);
        out.push(match pulse {
            Some(u) => u * rho * u.adjoint(),
            None => rho,
        });
    }
    out
}

pub fn simulate_decay(p: &DeviceParams, cfg: &ProtocolConfig) -> Result<PopulationSeries> {
    cfg.validate()?;
    if cfg.kind.is_ramsey() {
        return Err(Error::InvalidParameter(format!("{} is not a decay experiment", cfg.kind)));
    }
    // the free Hamiltonian is diagonal, so the frame only changes coherence
    // phases; the resonant frame keeps the generator small
    let omega_d = cfg.omega_d.unwrap_or(p.omega01());
    let k = free_propagator(p, Parity::Plus, omega_d, cfg.dt)?;
    let rho0 = ideal_prepare(cfg.kind.initial_level())?;
    let states = evolve_states(rho0.vec(), &k, cfg.n_steps, None);
    PopulationSeries::from_states(cfg.kind, cfg.times(), &states)
}

pub fn simulate_ramsey_branch(p: &DeviceParams, cfg: &ProtocolConfig, parity: Parity) -> Result<PopulationSeries> {
    cfg.validate()?;
    if !cfg.kind.is_ramsey() {
        return Err(Error::InvalidParameter(format!("{} is not a Ramsey experiment", cfg.kind)));
    }
    let level = cfg.kind.initial_level();
    let u = half_pi_unitary(level)?;
    let rho0 = apply_half_pi(&ideal_prepare(level)?, level)?;
    let omega_d = cfg.omega_d.expect("validated");
    let k = free_propagator(p, parity, omega_d, cfg.dt)?;
    let states = evolve_states(vectorize(rho0.matrix()), &k, cfg.n_steps, Some(&u));
    PopulationSeries::from_states(cfg.kind, cfg.times(), &states)
}

/// Mean of the two parity branches.
pub fn simulate_ramsey_parity_averaged(p: &DeviceParams, cfg: &ProtocolConfig) -> Result<PopulationSeries> {
    let plus = simulate_ramsey_branch(p, cfg, Parity::Plus)?;
    if p.eps12() == 0.0 {
        return Ok(plus);
    }
    let minus = simulate_ramsey_branch(p, cfg, Parity::Minus)?;
    plus.average(&minus)
}

/// Model series for any experiment; the 1↔2 Ramsey experiment is parity
/// averaged.
pub fn simulate(p: &DeviceParams, cfg: &ProtocolConfig) -> Result<PopulationSeries> {
    match cfg.kind {
        ProtocolKind::Ramsey01 => simulate_ramsey_branch(p, cfg, Parity::Plus),
        ProtocolKind::Ramsey12 => simulate_ramsey_parity_averaged(p, cfg),
        ProtocolKind::Decay1 | ProtocolKind::Decay2 => simulate_decay(p, cfg),
    }
}
