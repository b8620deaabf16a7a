//! Conversions between display units and the internal ones.
//!
//! Internally time is in μs, angular frequencies in rad/μs and rates in 1/μs.

use std::f64::consts::TAU;

/// rad/μs per GHz of ordinary frequency.
pub const RAD_PER_US_PER_GHZ: f64 = TAU * 1.0e3;
/// rad/μs per MHz of ordinary frequency.
pub const RAD_PER_US_PER_MHZ: f64 = TAU;
/// rad/μs per kHz of ordinary frequency.
pub const RAD_PER_US_PER_KHZ: f64 = TAU * 1.0e-3;

/// 1/μs per kHz of rate (a rate "in kHz" is 10³ events per second).
pub const PER_US_PER_KHZ: f64 = 1.0e-3;

pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    f_ghz * RAD_PER_US_PER_GHZ
}

pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    f_mhz * RAD_PER_US_PER_MHZ
}

pub fn khz_to_angular(f_khz: f64) -> f64 {
    f_khz * RAD_PER_US_PER_KHZ
}

pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / RAD_PER_US_PER_GHZ
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / RAD_PER_US_PER_MHZ
}

pub fn angular_to_khz(omega: f64) -> f64 {
    omega / RAD_PER_US_PER_KHZ
}

pub fn khz_to_rate(rate_khz: f64) -> f64 {
    rate_khz * PER_US_PER_KHZ
}

pub fn rate_to_khz(rate: f64) -> f64 {
    rate / PER_US_PER_KHZ
}

pub fn ns_to_us(t_ns: f64) -> f64 {
    t_ns * 1.0e-3
}
