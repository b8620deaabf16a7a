use rustfft::{num_complex::Complex, FftPlanner};

use super::PopulationSeries;
use crate::error::{Error, Result};

/// One-sided amplitude spectrum; frequencies in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs_mhz: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn bin_width_mhz(&self) -> f64 {
        self.freqs_mhz.get(1).copied().unwrap_or(0.0)
    }

    /// Interior local maxima (excluding DC), strongest first.
    pub fn peaks(&self) -> Vec<usize> {
        let m = &self.magnitudes;
        let mut idx: Vec<usize> = (1..m.len())
            .filter(|&k| {
                let left = m[k - 1];
                let right = m.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
                m[k] > left && m[k] >= right && m[k] > 0.0
            })
            .collect();
        idx.sort_by(|&a, &b| m[b].total_cmp(&m[a]));
        idx
    }

    pub fn dominant_peak(&self) -> Option<usize> {
        self.peaks().first().copied()
    }

    /// Peaks whose magnitude exceeds `factor` times the median magnitude.
    pub fn significant_peaks(&self, factor: f64) -> Vec<usize> {
        let mut sorted: Vec<f64> = self.magnitudes[1..].to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if sorted.is_empty() { 0.0 } else { sorted[sorted.len() / 2] };
        self.peaks().into_iter().filter(|&k| self.magnitudes[k] > factor * median).collect()
    }

    /// Peak location refined by a parabola through the neighbouring bins.
    pub fn interpolated_frequency(&self, k: usize) -> f64 {
        let m = &self.magnitudes;
        if k == 0 || k + 1 >= m.len() {
            return self.freqs_mhz[k];
        }
        let (a, b, c) = (m[k - 1], m[k], m[k + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        self.freqs_mhz[k] + shift.clamp(-0.5, 0.5) * self.bin_width_mhz()
    }
}

/// DFT magnitude (2|X_k|/n) of the mean-subtracted samples.
pub fn amplitude_spectrum(values: &[f64], dt: f64) -> Result<Spectrum> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!("spectrum needs at least 4 samples, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidData(format!("sample spacing must be > 0, got {dt}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let freqs_mhz = (0..=half).map(|k| k as f64 / (n as f64 * dt)).collect();
    let magnitudes = buf[..=half].iter().map(|z| 2.0 * z.norm() / n as f64).collect();
    Ok(Spectrum { freqs_mhz, magnitudes })
}

pub fn fft_amplitude_spectrum(series: &PopulationSeries, row: usize) -> Result<Spectrum> {
    if row >= series.pops.len() {
        return Err(Error::InvalidParameter(format!("no population row {row}")));
    }
    let t = &series.times;
    if t.len() < 4 {
        return Err(Error::InsufficientData(format!("spectrum needs at least 4 samples, got {}", t.len())));
    }
    let dt = t[1] - t[0];
    for (j, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-12) {
            return Err(Error::InvalidData(format!("non-uniform time grid at index {j}")));
        }
    }
    amplitude_spectrum(&series.pops[row], dt)
}
