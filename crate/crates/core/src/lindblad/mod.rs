//! Four-level Lindblad model: operators, the vectorized generator and
//! matrix-exponential propagation.

mod expm;
mod operators;
mod params;
mod propagate;
mod state;
mod superop;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;

pub use expm::matrix_exponential;
pub use operators::{
    build_lowering, build_system_hamiltonian, decoherence_operators, decoherence_operators_from_rates, lowering,
    number_operator, rotating_frame_hamiltonian, ControlEnvelope,
};
pub use params::{combined_dephasing_time, rates_from_times, times_from_rates, DeviceParams, Parity};
pub use propagate::{evolve_to, propagate, Propagator};
pub use state::DensityMatrix;
pub use superop::{build_superoperator, Superoperator};

/// Hilbert-space dimension, three measured levels plus one guard level.
pub const LEVELS: usize = 4;

pub type Operator = SMatrix<C64, 4, 4>;
pub type SuperMatrix = SMatrix<C64, 16, 16>;
pub type VecState = SVector<C64, 16>;

/// Column-stacking vectorization.
pub fn vectorize(m: &Operator) -> VecState {
    VecState::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &VecState) -> Operator {
    Operator::from_column_slice(v.as_slice())
}

/// Kronecker product `a ⊗ b` of two operators.
pub fn kron(a: &Operator, b: &Operator) -> SuperMatrix {
    let mut out = SuperMatrix::zeros();
    for i in 0..LEVELS {
        for j in 0..LEVELS {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..LEVELS {
                for l in 0..LEVELS {
                    out[(i * LEVELS + k, j * LEVELS + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub(crate) fn max_abs<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
