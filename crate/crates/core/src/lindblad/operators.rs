//! Ladder, Hamiltonian and jump operators of the four-level model.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::params::{DeviceParams, Parity};
use super::{Operator, LEVELS};
use crate::error::{Error, Result};

/// Lowering operator `a` on an `n`-level space: `a[k-1, k] = √k`.
pub fn build_lowering(n: usize) -> Result<DMatrix<C64>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("lowering operator needs n >= 2, got {n}")));
    }
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn lowering() -> Operator {
    let mut a = Operator::zeros();
    for k in 1..LEVELS {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

pub fn number_operator() -> Operator {
    let a = lowering();
    a.adjoint() * a
}

/// Diagonal system Hamiltonian with the 1↔2 gap taken from the given parity
/// branch.
pub fn build_system_hamiltonian(p: &DeviceParams, parity: Parity) -> Operator {
    let levels = [
        0.0,
        p.omega01(),
        p.omega01() + p.omega12(parity),
        p.omega01() + p.omega12(parity) + p.omega23(),
    ];
    Operator::from_diagonal(&levels.map(|e| C64::new(e, 0.0)).into())
}

/// Piecewise-constant in-phase and quadrature control amplitudes (rad/μs).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControlEnvelope {
    pub i: f64,
    pub q: f64,
}

impl ControlEnvelope {
    pub const OFF: ControlEnvelope = ControlEnvelope { i: 0.0, q: 0.0 };
}

/// `H_s − ω_d a†a + I(a + a†) − iQ(a − a†)`.
pub fn rotating_frame_hamiltonian(h_system: &Operator, omega_d: f64, envelope: ControlEnvelope) -> Operator {
    let a = lowering();
    let ad = a.adjoint();
    let mut h = h_system - (ad * a) * C64::new(omega_d, 0.0);
    if envelope.i != 0.0 {
        h += (a + ad) * C64::new(envelope.i, 0.0);
    }
    if envelope.q != 0.0 {
        h -= (a - ad) * C64::new(0.0, envelope.q);
    }
    h
}

/// Decay operator `L₁` (superdiagonal √γ₁,ₖ) and dephasing operator `L₂`
/// (diagonal √γ₂,ₖ with γ₂,₀ = 0).
pub fn decoherence_operators(p: &DeviceParams) -> Result<(Operator, Operator)> {
    decoherence_operators_from_rates(&p.gamma1(), &p.gamma2())
}

pub fn decoherence_operators_from_rates(gamma1: &[f64; 3], gamma2: &[f64; 3]) -> Result<(Operator, Operator)> {
    let mut l1 = Operator::zeros();
    let mut l2 = Operator::zeros();
    for k in 0..3 {
        if !(gamma1[k] >= 0.0) || !(gamma2[k] >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative decoherence rate at level {}: gamma1 = {}, gamma2 = {}",
                k + 1,
                gamma1[k],
                gamma2[k]
            )));
        }
        l1[(k, k + 1)] = C64::new(gamma1[k].sqrt(), 0.0);
        l2[(k + 1, k + 1)] = C64::new(gamma2[k].sqrt(), 0.0);
    }
    Ok((l1, l2))
}
