//! Box constraints and the O(1) optimizer coordinates.
//!
//! Frequencies become kHz offsets from the box centre and rates their
//! natural logarithm. Coordinate order is
//! `(ω₀₁, ω̄₁₂, ε₁₂, γ₁₁, γ₁₂, γ₂₁, γ₂₂)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::DeviceParams;
use crate::units::{ghz_to_angular, khz_to_angular, khz_to_rate, mhz_to_angular, RAD_PER_US_PER_KHZ};

pub const N_PARAMS: usize = 7;
pub const PARAM_NAMES: [&str; N_PARAMS] = ["omega01", "omega12_bar", "eps12", "gamma11", "gamma12", "gamma21", "gamma22"];

pub type Point = [f64; N_PARAMS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn centered(center: f64, half_width: f64) -> Self {
        Self::new(center - half_width, center + half_width)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains_strictly(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

/// Physical box (rad/μs and 1/μs) on the seven fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub omega01: Interval,
    pub omega12_bar: Interval,
    pub eps12: Interval,
    pub gamma1: [Interval; 2],
    pub gamma21: Interval,
    pub gamma22: Interval,
}

impl ParamBounds {
    /// 3448.7 ± 1 MHz, 3240.3 ± 1 MHz, ε in 140 ± 125 kHz, γ₁,ₖ in
    /// (3.33, 100) kHz, γ₂,₁ in (7.14, 1000) kHz and γ₂,₂ in (50, 500) kHz.
    pub fn reference() -> Self {
        Self {
            omega01: Interval::centered(ghz_to_angular(3.4487), mhz_to_angular(1.0)),
            omega12_bar: Interval::centered(ghz_to_angular(3.2403), mhz_to_angular(1.0)),
            eps12: Interval::centered(khz_to_angular(140.0), khz_to_angular(125.0)),
            gamma1: [Interval::new(khz_to_rate(3.33), khz_to_rate(100.0)); 2],
            gamma21: Interval::new(khz_to_rate(7.14), khz_to_rate(1000.0)),
            gamma22: Interval::new(khz_to_rate(50.0), khz_to_rate(500.0)),
        }
    }

    pub fn intervals(&self) -> [Interval; N_PARAMS] {
        [self.omega01, self.omega12_bar, self.eps12, self.gamma1[0], self.gamma1[1], self.gamma21, self.gamma22]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, iv) in PARAM_NAMES.iter().zip(self.intervals()) {
            if !(iv.lower < iv.upper) || !iv.lower.is_finite() || !iv.upper.is_finite() {
                return Err(Error::InvalidParameter(format!("{name}: bounds ({}, {}) are not an interval", iv.lower, iv.upper)));
            }
        }
        if self.eps12.lower < 0.0 {
            return Err(Error::InvalidParameter("eps12 lower bound must be >= 0".into()));
        }
        for (name, iv) in PARAM_NAMES[3..].iter().zip(&self.intervals()[3..]) {
            if !(iv.lower > 0.0) {
                return Err(Error::InvalidParameter(format!("{name}: rate bounds must be positive")));
            }
        }
        Ok(())
    }

    pub fn physical(p: &DeviceParams) -> Point {
        let [g11, g12, _] = p.gamma1();
        let [g21, g22, _] = p.gamma2();
        [p.omega01(), p.omega12_bar(), p.eps12(), g11, g12, g21, g22]
    }

    pub fn contains_strictly(&self, p: &DeviceParams) -> bool {
        Self::physical(p).iter().zip(self.intervals()).all(|(&v, iv)| iv.contains_strictly(v))
    }

    /// Optimizer coordinates of `p`.
    pub fn to_scaled(&self, p: &DeviceParams) -> Point {
        let v = Self::physical(p);
        let iv = self.intervals();
        std::array::from_fn(|i| if i < 3 { (v[i] - iv[i].center()) / RAD_PER_US_PER_KHZ } else { v[i].ln() })
    }

    /// Parameters at scaled point `x`. The guard level keeps `ω₂₃` from
    /// `template` and shares the level-2 rates.
    pub fn from_scaled(&self, x: &Point, template: &DeviceParams) -> Result<DeviceParams> {
        let iv = self.intervals();
        let v: Point = std::array::from_fn(|i| if i < 3 { iv[i].center() + x[i] * RAD_PER_US_PER_KHZ } else { x[i].exp() });
        DeviceParams::new(v[0], v[1], v[2].max(0.0), template.omega23(), [v[3], v[4], v[4]], [v[5], v[6], v[6]])
    }

    pub fn scaled_bounds(&self) -> (Point, Point) {
        let iv = self.intervals();
        let lo = std::array::from_fn(|i| {
            if i < 3 { (iv[i].lower - iv[i].center()) / RAD_PER_US_PER_KHZ } else { iv[i].lower.ln() }
        });
        let hi = std::array::from_fn(|i| {
            if i < 3 { (iv[i].upper - iv[i].center()) / RAD_PER_US_PER_KHZ } else { iv[i].upper.ln() }
        });
        (lo, hi)
    }

    /// Box centre (geometric centre for rates) with the default guard level.
    pub fn center_params(&self) -> DeviceParams {
        let (lo, hi) = self.scaled_bounds();
        let x: Point = std::array::from_fn(|i| 0.5 * (lo[i] + hi[i]));
        let iv = self.intervals();
        let v: Point = std::array::from_fn(|i| if i < 3 { iv[i].center() + x[i] * RAD_PER_US_PER_KHZ } else { x[i].exp() });
        DeviceParams::with_default_guard(v[0], v[1], v[2], [v[3], v[4]], [v[5], v[6]]).expect("box centre is valid")
    }
}

/// Log barrier `−Σ [ln(x − l) + ln(u − x)]` and its gradient; `None` outside
/// the open box.
pub fn log_barrier(x: &Point, lo: &Point, hi: &Point) -> Option<(f64, Point)> {
    let mut value = 0.0;
    let mut grad = [0.0; N_PARAMS];
    for i in 0..N_PARAMS {
        let a = x[i] - lo[i];
        let b = hi[i] - x[i];
        if !(a > 0.0 && b > 0.0) {
            return None;
        }
        value -= a.ln() + b.ln();
        grad[i] = -1.0 / a + 1.0 / b;
    }
    Some((value, grad))
}
