use super::{matrix_exponential, unvectorize, DensityMatrix, SuperMatrix, Superoperator, VecState};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// `K = exp(G Δt)` for a time-independent generator `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    matrix: SuperMatrix,
    dt: f64,
}

impl Propagator {
    pub fn new(generator: &Superoperator, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be >= 0, got {dt}")));
        }
        let m = generator.scaled(dt);
        let e = matrix_exponential(&DMatrix::from_column_slice(16, 16, m.as_slice()))?;
        Ok(Self { matrix: SuperMatrix::from_column_slice(e.as_slice()), dt })
    }

    pub fn matrix(&self) -> &SuperMatrix {
        &self.matrix
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn apply(&self, v: &VecState) -> VecState {
        self.matrix * v
    }

    /// `K(Δt)² = K(2Δt)`.
    pub fn squared(&self) -> Self {
        Self { matrix: self.matrix * self.matrix, dt: 2.0 * self.dt }
    }
}

/// `ρ_{j+1} = unvec(K vec(ρ_j))` for `j < steps`; returns all `steps + 1`
/// states, each validated as a density matrix.
pub fn propagate(rho0: &DensityMatrix, k: &Propagator, steps: usize) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*rho0);
    let mut v = rho0.vec();
    for j in 1..=steps {
        v = k.apply(&v);
        let rho = DensityMatrix::new(unvectorize(&v))
            .map_err(|e| Error::Numerical(format!("step {j} of propagation: {e}")))?;
        out.push(rho);
    }
    Ok(out)
}

/// State at time `t` from a single exponential `exp(G t)`.
pub fn evolve_to(rho0: &DensityMatrix, generator: &Superoperator, t: f64) -> Result<DensityMatrix> {
    let k = Propagator::new(generator, t)?;
    DensityMatrix::new(unvectorize(&k.apply(&rho0.vec())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_superoperator, decoherence_operators_from_rates, Operator};

    fn decay_generator(gamma: f64) -> Superoperator {
        let (l1, l2) = decoherence_operators_from_rates(&[gamma, 0.0, 0.0], &[0.0; 3]).unwrap();
        build_superoperator(&Operator::zeros(), &l1, &l2).unwrap()
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let k = Propagator::new(&decay_generator(0.1), 0.08).unwrap();
        let rho0 = DensityMatrix::pure(1).unwrap();
        assert_eq!(propagate(&rho0, &k, 0).unwrap(), vec![rho0]);
    }

    #[test]
    fn single_rate_decay_is_exponential() {
        let gamma = 1.0 / 258.39;
        let k = Propagator::new(&decay_generator(gamma), 0.08).unwrap();
        let traj = propagate(&DensityMatrix::pure(1).unwrap(), &k, 500).unwrap();
        for (j, rho) in traj.iter().enumerate() {
            let t = 0.08 * j as f64;
            assert!((rho.population(1) - (-gamma * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn one_lifetime_leaves_e_inverse() {
        let gamma = 0.25;
        let rho = evolve_to(&DensityMatrix::pure(1).unwrap(), &decay_generator(gamma), 1.0 / gamma).unwrap();
        assert!((rho.population(1) - (-1.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn stepping_and_single_exponential_agree() {
        let gen = decay_generator(0.05);
        let k = Propagator::new(&gen, 0.02).unwrap();
        let traj = propagate(&DensityMatrix::pure(1).unwrap(), &k, 250).unwrap();
        let direct = evolve_to(&DensityMatrix::pure(1).unwrap(), &gen, 5.0).unwrap();
        assert!((traj[250].matrix() - direct.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn negative_step_is_rejected() {
        assert!(Propagator::new(&decay_generator(0.1), -1.0).is_err());
    }
}
