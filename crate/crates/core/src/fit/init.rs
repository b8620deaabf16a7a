//! Starting point from FFT peaks of the Ramsey fringes and log-linear decay
//! slopes.

use super::space::{Interval, ParamBounds, Point, N_PARAMS};
use crate::error::{Error, Result};
use crate::io::ExperimentData;
use crate::lindblad::DeviceParams;
use crate::protocol::{amplitude_spectrum, ProtocolKind, Spectrum};
use crate::units::{ghz_to_angular, mhz_to_angular};

/// Peaks must exceed this multiple of the median spectral magnitude.
pub const PEAK_FACTOR: f64 = 3.0;

/// Fraction of each scaled box width kept clear of the bounds.
const INTERIOR_MARGIN: f64 = 0.01;

/// Both transition candidates `ω_d ± 2πf`, the one nearer the box centre
/// first.
fn candidates(omega_d: f64, f_mhz: f64, iv: &Interval) -> [f64; 2] {
    let up = omega_d + mhz_to_angular(f_mhz);
    let down = omega_d - mhz_to_angular(f_mhz);
    let c = iv.center();
    if (up - c).abs() <= (down - c).abs() { [up, down] } else { [down, up] }
}

fn signal_spectrum(d: &ExperimentData) -> Result<Spectrum> {
    amplitude_spectrum(&d.pops[d.kind.signal_level()], d.dt)
}

fn drive(d: &ExperimentData) -> Result<f64> {
    d.meta
        .drive_ghz
        .map(ghz_to_angular)
        .ok_or_else(|| Error::InvalidData(format!("{}: Ramsey data without drive frequency", d.kind)))
}

/// Least-squares slope of `ln P` against `t` where `P` is well above zero;
/// returns the decay rate in 1/μs.
pub fn log_linear_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times.iter().zip(values).filter(|(_, &v)| v > 0.05).map(|(&t, &v)| (t, v.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    if sxx == 0.0 {
        return None;
    }
    let rate = -sxy / sxx;
    (rate.is_finite() && rate > 0.0).then_some(rate)
}

fn ramsey01_guess(d: &ExperimentData, iv: &Interval) -> Result<Option<f64>> {
    let s = signal_spectrum(d)?;
    let Some(&k) = s.significant_peaks(PEAK_FACTOR).first() else {
        return Ok(None);
    };
    Ok(Some(candidates(drive(d)?, s.interpolated_frequency(k), iv)[0]))
}

/// `(ω̄, ε)` from the 1↔2 fringe; a single resolved peak leaves ε at the
/// box centre.
fn ramsey12_guess(d: &ExperimentData, bounds: &ParamBounds) -> Result<Option<(f64, f64)>> {
    let s = signal_spectrum(d)?;
    let peaks = s.significant_peaks(PEAK_FACTOR);
    let Some(&k0) = peaks.first() else {
        return Ok(None);
    };
    let wd = drive(d)?;
    let f0 = s.interpolated_frequency(k0);
    if let Some(&k1) = peaks.get(1) {
        let f1 = s.interpolated_frequency(k1);
        let bar_cand = candidates(wd, 0.5 * (f0 + f1), &bounds.omega12_bar)[0];
        let sign = (bar_cand - wd).signum();
        let (a, b) = (wd + sign * mhz_to_angular(f0), wd + sign * mhz_to_angular(f1));
        let eps = 0.5 * (a - b).abs();
        if bounds.eps12.contains_strictly(eps) {
            return Ok(Some((0.5 * (a + b), eps)));
        }
    }
    Ok(Some((candidates(wd, f0, &bounds.omega12_bar)[0], bounds.eps12.center())))
}

/// Initial parameters from the data: frequencies from the dominant FFT peaks
/// relative to the drive, `γ₁` from decay slopes, everything else at the box
/// centre; the result is pulled strictly inside `bounds`.
pub fn initialize_from_fft(data: &[ExperimentData], bounds: &ParamBounds) -> Result<DeviceParams> {
    bounds.validate()?;
    if !data.iter().any(|d| d.kind.is_ramsey()) {
        return Err(Error::InsufficientData("no Ramsey series to initialize frequencies from".into()));
    }
    let center = bounds.center_params();
    let mut v = ParamBounds::physical(&center);
    for d in data {
        match d.kind {
            ProtocolKind::Ramsey01 => {
                if let Some(w) = ramsey01_guess(d, &bounds.omega01)? {
                    v[0] = w;
                }
            }
            ProtocolKind::Ramsey12 => {
                if let Some((bar, eps)) = ramsey12_guess(d, bounds)? {
                    v[1] = bar;
                    v[2] = eps;
                }
            }
            ProtocolKind::Decay1 | ProtocolKind::Decay2 => {
                let slot = if d.kind == ProtocolKind::Decay1 { 3 } else { 4 };
                if let Some(rate) = log_linear_rate(&d.times, &d.pops[d.kind.signal_level()]) {
                    v[slot] = rate;
                }
            }
        }
    }
    let p = DeviceParams::with_default_guard(v[0], v[1], v[2].max(0.0), [v[3], v[4]], [v[5], v[6]])?;
    clamp_interior(&p, bounds)
}

/// Moves every coordinate at least 1% of the box width away from its bounds.
pub fn clamp_interior(p: &DeviceParams, bounds: &ParamBounds) -> Result<DeviceParams> {
    let (lo, hi) = bounds.scaled_bounds();
    let x = bounds.to_scaled(p);
    let y: Point = std::array::from_fn(|i| {
        let m = INTERIOR_MARGIN * (hi[i] - lo[i]);
        let xi = if x[i].is_finite() { x[i] } else { 0.5 * (lo[i] + hi[i]) };
        xi.clamp(lo[i] + m, hi[i] - m)
    });
    debug_assert!((0..N_PARAMS).all(|i| y[i] > lo[i] && y[i] < hi[i]));
    bounds.from_scaled(&y, p)
}
