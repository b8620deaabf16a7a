use num_complex::Complex64 as C64;

use super::{kron, max_abs, unvectorize, vectorize, Operator, SuperMatrix, VecState};
use crate::error::{Error, Result};

/// Generator of `d/dt vec(ρ)` in column-stacking convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: SuperMatrix,
    hamiltonian: SuperMatrix,
    dissipators: [SuperMatrix; 2],
}

impl Superoperator {
    pub fn matrix(&self) -> &SuperMatrix {
        &self.matrix
    }

    /// `−i(I⊗H − Hᵀ⊗I)`.
    pub fn hamiltonian_part(&self) -> &SuperMatrix {
        &self.hamiltonian
    }

    /// Vectorized decay and dephasing dissipators.
    pub fn dissipator_parts(&self) -> &[SuperMatrix; 2] {
        &self.dissipators
    }

    pub fn apply(&self, v: &VecState) -> VecState {
        self.matrix * v
    }

    pub fn apply_matrix(&self, m: &Operator) -> Operator {
        unvectorize(&(self.matrix * vectorize(m)))
    }

    pub fn scaled(&self, t: f64) -> SuperMatrix {
        self.matrix * C64::new(t, 0.0)
    }
}

fn dissipator(l: &Operator) -> SuperMatrix {
    let eye = Operator::identity();
    let ldl = l.adjoint() * l;
    kron(&l.conjugate(), l) - (kron(&eye, &ldl) + kron(&ldl.transpose(), &eye)) * C64::new(0.5, 0.0)
}

/// `−i(I⊗H − Hᵀ⊗I) + Σⱼ [L̄ⱼ⊗Lⱼ − ½(I⊗Lⱼ†Lⱼ + (Lⱼ†Lⱼ)ᵀ⊗I)]`.
///
/// For the real jump operators used here this is the usual
/// `Lⱼ⊗Lⱼ − ½(I⊗LⱼᵀLⱼ + LⱼᵀLⱼ⊗I)`.
pub fn build_superoperator(h_rot: &Operator, l1: &Operator, l2: &Operator) -> Result<Superoperator> {
    let scale = max_abs(h_rot).max(1.0);
    let dev = max_abs(&(h_rot - h_rot.adjoint()));
    if dev > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!("Hamiltonian is not Hermitian (deviation {dev:.3e})")));
    }
    let eye = Operator::identity();
    let hamiltonian = (kron(&eye, h_rot) - kron(&h_rot.transpose(), &eye)) * C64::new(0.0, -1.0);
    let dissipators = [dissipator(l1), dissipator(l2)];
    let matrix = hamiltonian + dissipators[0] + dissipators[1];
    Ok(Superoperator { matrix, hamiltonian, dissipators })
}
