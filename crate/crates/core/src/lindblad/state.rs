use num_complex::Complex64 as C64;

use super::{max_abs, unvectorize, vectorize, Operator, VecState, LEVELS};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// A validated 4×4 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Wraps `m` after checking Hermiticity, unit trace and positivity.
    pub fn new(m: Operator) -> Result<Self> {
        let herm = max_abs(&(m - m.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::Numerical(format!("density matrix not Hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Numerical(format!("density matrix trace is {tr}")));
        }
        let rho = Self(m);
        let low = rho.min_eigenvalue();
        if low < -POSITIVITY_TOL {
            return Err(Error::Numerical(format!("density matrix eigenvalue {low:.3e} below tolerance")));
        }
        Ok(rho)
    }

    /// `|level⟩⟨level|`.
    pub fn pure(level: usize) -> Result<Self> {
        if level >= LEVELS {
            return Err(Error::InvalidDimension(format!("level {level} outside {LEVELS}-level space")));
        }
        let mut m = Operator::zeros();
        m[(level, level)] = C64::new(1.0, 0.0);
        Ok(Self(m))
    }

    pub fn maximally_mixed() -> Self {
        Self(Operator::identity() * C64::new(1.0 / LEVELS as f64, 0.0))
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_matrix(self) -> Operator {
        self.0
    }

    pub fn vec(&self) -> VecState {
        vectorize(&self.0)
    }

    pub fn from_vec(v: &VecState) -> Result<Self> {
        Self::new(unvectorize(v))
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn populations(&self) -> [f64; LEVELS] {
        std::array::from_fn(|k| self.0[(k, k)].re)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // symmetrize so round-off anti-Hermitian parts cannot leak in
        let h = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self(u * self.0 * u.adjoint())
    }

    /// Convex combination `w ρ₁ + (1 − w) ρ₂`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        Self(self.0 * C64::new(w, 0.0) + other.0 * C64::new(1.0 - w, 0.0))
    }
}
