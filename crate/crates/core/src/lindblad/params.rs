use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::ghz_to_angular;

/// Charge parity of the 1↔2 transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Plus, Parity::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }
}

/// Transition frequencies (rad/μs) and decoherence rates (1/μs) of a
/// four-level transmon.
///
/// The 1↔2 transition is stored by its two parity branches, so
/// `omega12_plus() - omega12_minus() == 2.0 * eps12()` holds bit-exactly.
/// Index 2 of `gamma1`/`gamma2` belongs to the guard level |3⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    omega01: f64,
    omega12_plus: f64,
    omega12_minus: f64,
    omega23: f64,
    gamma1: [f64; 3],
    gamma2: [f64; 3],
}

impl DeviceParams {
    pub fn new(
        omega01: f64,
        omega12_bar: f64,
        eps12: f64,
        omega23: f64,
        gamma1: [f64; 3],
        gamma2: [f64; 3],
    ) -> Result<Self> {
        if !(eps12 >= 0.0) || !eps12.is_finite() {
            return Err(Error::InvalidParameter(format!("charge dispersion must be >= 0, got {eps12}")));
        }
        Self::from_parity_frequencies(
            omega01,
            omega12_bar + eps12,
            omega12_bar - eps12,
            omega23,
            gamma1,
            gamma2,
        )
    }

    pub fn from_parity_frequencies(
        omega01: f64,
        omega12_plus: f64,
        omega12_minus: f64,
        omega23: f64,
        gamma1: [f64; 3],
        gamma2: [f64; 3],
    ) -> Result<Self> {
        for (name, v) in [
            ("omega01", omega01),
            ("omega12_plus", omega12_plus),
            ("omega12_minus", omega12_minus),
            ("omega23", omega23),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if omega12_plus < omega12_minus {
            return Err(Error::InvalidParameter(format!(
                "omega12_plus ({omega12_plus}) below omega12_minus ({omega12_minus})"
            )));
        }
        check_rates("gamma1", &gamma1)?;
        check_rates("gamma2", &gamma2)?;
        Ok(Self { omega01, omega12_plus, omega12_minus, omega23, gamma1, gamma2 })
    }

    /// Guard level extrapolated from the fitted levels: ω₂,₃ = 2ω̄₁,₂ − ω₀,₁
    /// and the guard rates copied from level 2.
    pub fn with_default_guard(
        omega01: f64,
        omega12_bar: f64,
        eps12: f64,
        gamma1: [f64; 2],
        gamma2: [f64; 2],
    ) -> Result<Self> {
        Self::new(
            omega01,
            omega12_bar,
            eps12,
            2.0 * omega12_bar - omega01,
            [gamma1[0], gamma1[1], gamma1[1]],
            [gamma2[0], gamma2[1], gamma2[1]],
        )
    }

    /// Reference transmon: f₀₁ = 3.448646 GHz, f₁₂ = 3.240105 / 3.240403 GHz,
    /// T₁ = (258.39, 100.79) μs, T₂ = (38.44, 29.94) μs.
    pub fn reference() -> Self {
        let (gamma1, gamma2) = rates_from_times(&[258.39, 100.79, 100.79], &[38.44, 29.94, 29.94])
            .expect("reference times are positive");
        let omega01 = ghz_to_angular(3.448646);
        let plus = ghz_to_angular(3.240403);
        let minus = ghz_to_angular(3.240105);
        let bar = 0.5 * (plus + minus);
        Self::from_parity_frequencies(
            omega01,
            plus,
            minus,
            2.0 * bar - omega01,
            [gamma1[0], gamma1[1], gamma1[1]],
            [gamma2[0], gamma2[1], gamma2[1]],
        )
        .expect("reference parameters are valid")
    }

    pub fn omega01(&self) -> f64 {
        self.omega01
    }

    pub fn omega12_plus(&self) -> f64 {
        self.omega12_plus
    }

    pub fn omega12_minus(&self) -> f64 {
        self.omega12_minus
    }

    pub fn omega12_bar(&self) -> f64 {
        0.5 * (self.omega12_plus + self.omega12_minus)
    }

    pub fn eps12(&self) -> f64 {
        0.5 * (self.omega12_plus - self.omega12_minus)
    }

    pub fn omega12(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Plus => self.omega12_plus,
            Parity::Minus => self.omega12_minus,
        }
    }

    pub fn omega23(&self) -> f64 {
        self.omega23
    }

    pub fn gamma1(&self) -> [f64; 3] {
        self.gamma1
    }

    pub fn gamma2(&self) -> [f64; 3] {
        self.gamma2
    }

    pub fn with_frequencies(&self, omega01: f64, omega12_plus: f64, omega12_minus: f64) -> Result<Self> {
        Self::from_parity_frequencies(
            omega01,
            omega12_plus,
            omega12_minus,
            self.omega23,
            self.gamma1,
            self.gamma2,
        )
    }

    pub fn with_rates(&self, gamma1: [f64; 3], gamma2: [f64; 3]) -> Result<Self> {
        Self::from_parity_frequencies(
            self.omega01,
            self.omega12_plus,
            self.omega12_minus,
            self.omega23,
            gamma1,
            gamma2,
        )
    }

    /// Decay and pure-dephasing times `(T1, T2)` in μs.
    pub fn times(&self) -> Result<([f64; 3], [f64; 3])> {
        times_from_rates(&self.gamma1, &self.gamma2)
    }
}

fn check_rates(name: &str, rates: &[f64; 3]) -> Result<()> {
    for (k, &g) in rates.iter().enumerate() {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!("{name}[{k}] must be a finite rate >= 0, got {g}")));
        }
    }
    Ok(())
}

/// Decay rates γ₁,ₖ = 1/T₁,ₖ and dephasing rates from
/// √γ₂,ₖ = √γ₂,ₖ₋₁ + √(2/T₂,ₖ), γ₂,₀ = 0.
pub fn rates_from_times(t1: &[f64; 3], t2: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    for &t in t1.iter().chain(t2) {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("decoherence time must be positive, got {t}")));
        }
    }
    let gamma1 = t1.map(|t| 1.0 / t);
    let mut gamma2 = [0.0; 3];
    let mut root = 0.0;
    for k in 0..3 {
        root += (2.0 / t2[k]).sqrt();
        gamma2[k] = root * root;
    }
    Ok((gamma1, gamma2))
}

/// Inverse of [`rates_from_times`]. Decay rates must be positive.
pub fn times_from_rates(gamma1: &[f64; 3], gamma2: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let mut t1 = [0.0; 3];
    let mut t2 = [0.0; 3];
    let mut prev_root = 0.0;
    for k in 0..3 {
        if !(gamma1[k] > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma1[{k}] = {} has no finite time", gamma1[k])));
        }
        t1[k] = 1.0 / gamma1[k];
        let root = gamma2[k].sqrt();
        let step = root - prev_root;
        if !(step >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sqrt(gamma2) must not decrease with level, step {k} is {step}"
            )));
        }
        // a level with no extra dephasing has an infinite pure-dephasing time
        t2[k] = if step == 0.0 { f64::INFINITY } else { 2.0 / (step * step) };
        prev_root = root;
    }
    Ok((t1, t2))
}

/// Combined decoherence time: 1/T₂* = 1/(2T₁) + 1/T₂.
pub fn combined_dephasing_time(t1: f64, t2: f64) -> f64 {
    1.0 / (1.0 / (2.0 * t1) + 1.0 / t2)
}
