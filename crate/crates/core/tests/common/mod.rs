#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::Rng;

use qudit_char::lindblad::{
    build_superoperator, build_system_hamiltonian, decoherence_operators, rotating_frame_hamiltonian, ControlEnvelope,
    DensityMatrix, DeviceParams, Operator, Parity, Superoperator,
};
use qudit_char::units::{ghz_to_angular, khz_to_rate, mhz_to_angular};

/// `−i[H, ρ] + Σ (LρL† − ½{L†L, ρ})`, written out in operator form.
pub fn lindblad_rhs(h: &Operator, ls: &[Operator], rho: &Operator) -> Operator {
    let i = C64::new(0.0, 1.0);
    let mut out = -(h * rho - rho * h) * i;
    for l in ls {
        let ld = l.adjoint();
        let ldl = ld * l;
        out += l * rho * ld - (ldl * rho + rho * ldl) * C64::new(0.5, 0.0);
    }
    out
}

/// Classical fourth-order Runge-Kutta on the matrix equation.
pub fn rk4(h: &Operator, ls: &[Operator], rho0: &Operator, t: f64, substeps: usize) -> Operator {
    let dt = t / substeps as f64;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let mut rho = *rho0;
    for _ in 0..substeps {
        let k1 = lindblad_rhs(h, ls, &rho);
        let k2 = lindblad_rhs(h, ls, &(rho + k1 * half));
        let k3 = lindblad_rhs(h, ls, &(rho + k2 * half));
        let k4 = lindblad_rhs(h, ls, &(rho + k3 * full));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * sixth;
    }
    rho
}

pub fn max_abs(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random instance with every transition within a few MHz of the drive,
/// rates up to a few hundred kHz and constant controls up to 2 MHz.
pub struct RandomCase {
    pub params: DeviceParams,
    pub omega_d: f64,
    pub envelope: ControlEnvelope,
}

impl RandomCase {
    pub fn draw<R: Rng>(rng: &mut R) -> Self {
        let omega_d = ghz_to_angular(3.4);
        let f = |rng: &mut R| omega_d + mhz_to_angular(rng.random_range(-4.0..4.0));
        let omega01 = f(rng);
        let bar = f(rng);
        let eps = mhz_to_angular(rng.random_range(0.0..0.5));
        let omega23 = f(rng);
        let g1 = [0; 3].map(|_| khz_to_rate(rng.random_range(1.0..300.0)));
        let mut g2 = [0.0; 3];
        let mut acc = 0.0;
        for g in g2.iter_mut() {
            acc += rng.random_range(0.0..10.0);
            *g = acc * acc * 1e-3;
        }
        let params = DeviceParams::new(omega01, bar, eps, omega23, g1, g2).unwrap();
        let envelope = ControlEnvelope { i: mhz_to_angular(rng.random_range(-2.0..2.0)), q: mhz_to_angular(rng.random_range(-2.0..2.0)) };
        Self { params, omega_d, envelope }
    }

    pub fn hamiltonian(&self, parity: Parity) -> Operator {
        rotating_frame_hamiltonian(&build_system_hamiltonian(&self.params, parity), self.omega_d, self.envelope)
    }

    pub fn operators(&self) -> [Operator; 2] {
        let (l1, l2) = decoherence_operators(&self.params).unwrap();
        [l1, l2]
    }

    pub fn generator(&self, parity: Parity) -> Superoperator {
        let [l1, l2] = self.operators();
        build_superoperator(&self.hamiltonian(parity), &l1, &l2).unwrap()
    }
}

/// `G G† / tr` for a random complex `G`; full rank almost surely.
pub fn random_density<R: Rng>(rng: &mut R) -> DensityMatrix {
    let g = Operator::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

/// Cubic Lagrange interpolation through `(ts[i], vs[i])`.
fn lagrange4(ts: &[f64; 4], vs: &[f64; 4], t: f64) -> f64 {
    (0..4)
        .map(|i| vs[i] * (0..4).filter(|&m| m != i).map(|m| (t - ts[m]) / (ts[i] - ts[m])).product::<f64>())
        .sum()
}

/// Zero crossings of the slow envelope `A(t)` of
/// `x(t) = b(t) + A(t) cos(Ω t)`. `x` is interpolated at the extrema
/// `t_k = kπ/Ω` of the carrier, the baseline removed with the symmetric
/// `[¼, ½, ¼]` filter, the sign of the carrier undone, and each sign change
/// located on the cubic through the four nearest envelope samples.
pub fn envelope_zero_crossings(x: &[f64], dt: f64, omega: f64) -> Vec<f64> {
    let sample = |t: f64| {
        let j = ((t / dt).floor() as usize).saturating_sub(1).min(x.len() - 4);
        let ts = std::array::from_fn(|i| (j + i) as f64 * dt);
        let vs = std::array::from_fn(|i| x[j + i]);
        lagrange4(&ts, &vs, t)
    };
    let half = std::f64::consts::PI / omega;
    let k_max = ((x.len() - 1) as f64 * dt / half).floor() as usize;
    let xs: Vec<f64> = (0..=k_max).map(|k| sample(k as f64 * half)).collect();
    let tk: Vec<f64> = (1..k_max).map(|k| k as f64 * half).collect();
    let env: Vec<f64> = (1..k_max)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (0.5 * xs[k] - 0.25 * (xs[k - 1] + xs[k + 1]))
        })
        .collect();
    let mut out = Vec::new();
    for k in 1..env.len() {
        if env[k - 1].signum() == env[k].signum() {
            continue;
        }
        let lo = k.saturating_sub(2).min(env.len() - 4);
        let ts = std::array::from_fn(|i| tk[lo + i]);
        let vs = std::array::from_fn(|i| env[lo + i]);
        let (mut a, mut b) = (tk[k - 1], tk[k]);
        let fa = lagrange4(&ts, &vs, a);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if lagrange4(&ts, &vs, m).signum() == fa.signum() { a = m } else { b = m }
        }
        out.push(0.5 * (a + b));
    }
    out
}
