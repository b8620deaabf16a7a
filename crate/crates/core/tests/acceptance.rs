//! Acceptance criteria, one line per criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the report.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{envelope_zero_crossings, lindblad_rhs, max_abs, random_density, rk4, RandomCase};
use qudit_char::bayes::{
    acceptance_probability, gibbs_update_tau_from_ssr, log_likelihood, metropolis_accept, run_chain, summarize, tau_posterior,
    theta_of, PriorSpec, RamseyLikelihood, SamplerConfig,
};
use qudit_char::fit::{fit, FitProblem, ParamBounds};
use qudit_char::io::generate_synthetic;
use qudit_char::lindblad::{propagate, unvectorize, DeviceParams, Parity, Propagator};
use qudit_char::protocol::{
    amplitude_spectrum, simulate, ProtocolConfig, ProtocolKind, RAMSEY01_DRIVE_GHZ, RAMSEY12_DRIVE_GHZ,
};
use qudit_char::readout::{fit_gmm, mitigate, mitigate_shots, build_confusion, ConfusionMatrix, IqModel};
use qudit_char::units::{angular_to_khz, angular_to_mhz, ghz_to_angular, khz_to_angular, mhz_to_angular};

// criterion 1
const PHYSICS_CASES: usize = 100;
const PHYSICS_STEPS: usize = 500;
const TRACE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = -1e-9;
const SUPEROP_TOL: f64 = 1e-12;
const RK4_TOL: f64 = 1e-8;
const RK4_SUBSTEPS: usize = 64;
const RK4_STEPS: usize = 10;
const PHYSICS_SECONDS: f64 = 30.0;
// criterion 2
const DECAY_TOL: f64 = 1e-9;
// criterion 3
const DETUNINGS_MHZ: [f64; 4] = [0.2, 0.5, 0.9762, 2.0];
// criterion 4
const NODES_US: [f64; 2] = [1.68, 5.03];
const NODE_TOL_US: f64 = 0.020;
const BEATING_STEPS: usize = 400;
const SPLIT_KHZ: f64 = 298.0;
// criterion 5
const OFFSET_KHZ: f64 = 300.0;
const NOISELESS_FREQ_TOL_KHZ: f64 = 0.1;
const NOISELESS_TIME_REL_TOL: f64 = 0.01;
const NOISY_SIGMA: f64 = 0.02;
const NOISY_SEEDS: u64 = 10;
const NOISY_FREQ_TOL_KHZ: f64 = 2.0;
const NOISY_MIN_SUCCESSES: usize = 9;
const STAGE_MONOTONE_TOL: f64 = 1e-12;
const FIT_SECONDS: f64 = 300.0;
// criterion 6
const GIBBS_DRAWS: usize = 100_000;
const GIBBS_MOMENT_TOL: f64 = 0.01;
const CONJUGACY_POINTS: usize = 100;
const CONJUGACY_TOL: f64 = 1e-10;
// criterion 7
const BALANCE_TOL: f64 = 1e-12;
const TOY_STEPS: usize = 1_000_000;
const TOY_REL_TOL: f64 = 0.01;
// criterion 8
const BAYES_SIGMA: f64 = 0.1;
const BAYES_RETAINED: usize = 2500;
const BAYES_Z_MAX: f64 = 3.0;
const BAYES_SD_KHZ: (f64, f64) = (0.1, 10.0);
const BAYES_ACCEPTANCE: (f64, f64) = (0.10, 0.60);
const BAYES_SECONDS: f64 = 600.0;
// criterion 9
const INVERSION_TOL: f64 = 1e-12;
const TRAINING_SHOTS_PER_STATE: usize = 26_667;
const PIPELINE_TRIALS: usize = 200;
const PIPELINE_SHOTS: usize = 1000;
const PIPELINE_MIN_FRACTION: f64 = 0.95;
const EM_MONOTONE_TOL: f64 = 1e-10;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok { Ok(detail) } else { Err(detail) }
}

fn reference_data(sigmas: [f64; 4], seed: u64) -> Vec<qudit_char::io::ExperimentData> {
    let truth = DeviceParams::reference();
    generate_synthetic(&truth, &ProtocolConfig::reference_set(), &sigmas, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn criterion_1_physics() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut trace_err, mut herm_err, mut min_eig, mut super_err, mut rk4_err) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    let dt = 0.02;
    for case in 0..PHYSICS_CASES {
        let c = RandomCase::draw(&mut rng);
        let parity = if case % 2 == 0 { Parity::Plus } else { Parity::Minus };
        let g = c.generator(parity);
        let h = c.hamiltonian(parity);
        let ls = c.operators();

        for _ in 0..3 {
            let rho = *random_density(&mut rng).matrix();
            let direct = lindblad_rhs(&h, &ls, &rho);
            let vectorized = g.apply_matrix(&rho);
            super_err = super_err.max(max_abs(&(direct - vectorized)) / max_abs(&direct).max(1.0));
        }
        // a non-Hermitian argument exercises the full linear map
        let x = qudit_char::lindblad::Operator::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        super_err = super_err.max(max_abs(&(lindblad_rhs(&h, &ls, &x) - g.apply_matrix(&x))) / max_abs(&lindblad_rhs(&h, &ls, &x)).max(1.0));

        let k = Propagator::new(&g, dt).map_err(|e| format!("case {case}: {e}"))?;
        let rho0 = random_density(&mut rng);
        let mut v = rho0.vec();
        let mut oracle = *rho0.matrix();
        for _ in 0..RK4_STEPS {
            v = k.apply(&v);
            oracle = rk4(&h, &ls, &oracle, dt, RK4_SUBSTEPS);
            rk4_err = rk4_err.max(max_abs(&(unvectorize(&v) - oracle)));
        }

        let start_state = if case % 3 == 0 { qudit_char::lindblad::DensityMatrix::pure(case % 4).unwrap() } else { rho0 };
        let traj = propagate(&start_state, &k, PHYSICS_STEPS).map_err(|e| format!("case {case}: {e}"))?;
        for rho in &traj {
            let m = rho.matrix();
            trace_err = trace_err.max((m.trace() - C64::new(1.0, 0.0)).norm());
            herm_err = herm_err.max(max_abs(&(m - m.adjoint())));
            min_eig = min_eig.min(rho.min_eigenvalue());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{PHYSICS_CASES} cases x {PHYSICS_STEPS} steps: trace {trace_err:.1e}, hermiticity {herm_err:.1e}, min eigenvalue {min_eig:.1e}, \
         superoperator vs direct {super_err:.1e}, propagator vs RK4 {rk4_err:.1e}, {secs:.1} s"
    );
    ensure(
        trace_err <= TRACE_TOL
            && herm_err <= HERMITIAN_TOL
            && min_eig >= POSITIVITY_TOL
            && super_err <= SUPEROP_TOL
            && rk4_err <= RK4_TOL
            && secs < PHYSICS_SECONDS,
        detail,
    )
}

fn criterion_2_decay() -> Check {
    let gamma = 1.0 / 258.39;
    let p = DeviceParams::new(ghz_to_angular(3.448646), ghz_to_angular(3.24), 0.0, ghz_to_angular(3.03), [gamma, 0.0, 0.0], [0.0; 3])
        .unwrap();
    let cfg = ProtocolConfig::decay(ProtocolKind::Decay1);
    let s = simulate(&p, &cfg).map_err(|e| e.to_string())?;
    let err = s.times.iter().zip(&s.pops[1]).map(|(t, p)| (p - (-gamma * t).exp()).abs()).fold(0.0, f64::max);
    ensure(s.len() == 501 && err <= DECAY_TOL, format!("{} points of 80 ns, max |P1 - exp(-g t)| = {err:.1e}", s.len()))
}

fn criterion_3_ramsey_frequency() -> Check {
    let p = DeviceParams::reference();
    let mut parts = Vec::new();
    let mut ok = true;
    for d in DETUNINGS_MHZ {
        let omega_d = if d == 0.9762 { ghz_to_angular(RAMSEY01_DRIVE_GHZ) } else { p.omega01() - mhz_to_angular(d) };
        let detuning = angular_to_mhz(p.omega01() - omega_d);
        let s = simulate(&p, &ProtocolConfig::ramsey(ProtocolKind::Ramsey01, omega_d)).map_err(|e| e.to_string())?;
        let spec = amplitude_spectrum(s.row(1), s.times[1]).map_err(|e| e.to_string())?;
        let k = spec.dominant_peak().ok_or("no peak")?;
        let f = spec.freqs_mhz[k];
        ok &= (f - detuning).abs() <= spec.bin_width_mhz();
        parts.push(format!("{detuning:.4} MHz -> peak {f:.4} MHz"));
    }
    ensure(ok, format!("{} (bin {:.4} MHz)", parts.join(", "), 1.0 / (251.0 * 0.02)))
}

fn criterion_4_parity_beating() -> Check {
    let p = DeviceParams::reference();
    let drive = ghz_to_angular(RAMSEY12_DRIVE_GHZ);
    let dt = ProtocolConfig::RAMSEY_DT;
    let cfg = ProtocolConfig::ramsey(ProtocolKind::Ramsey12, drive).with_grid(dt, BEATING_STEPS);
    let s = simulate(&p, &cfg).map_err(|e| e.to_string())?;
    let omega = p.omega12_bar() - drive;
    let nodes = envelope_zero_crossings(s.row(2), dt, omega);
    let mut ok = true;
    let mut found = Vec::new();
    for target in NODES_US {
        match nodes.iter().min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs())) {
            Some(&t) => {
                ok &= (t - target).abs() <= NODE_TOL_US;
                found.push(format!("{t:.3} us"));
            }
            None => ok = false,
        }
    }
    let standard = simulate(&p, &ProtocolConfig::ramsey(ProtocolKind::Ramsey12, drive)).map_err(|e| e.to_string())?;
    let spec = amplitude_spectrum(standard.row(2), dt).map_err(|e| e.to_string())?;
    let peaks = spec.significant_peaks(3.0);
    let split = if peaks.len() >= 2 {
        1e3 * (spec.interpolated_frequency(peaks[0]) - spec.interpolated_frequency(peaks[1])).abs()
    } else {
        f64::NAN
    };
    ok &= (split - SPLIT_KHZ).abs() <= 1e3 * spec.bin_width_mhz();
    ensure(
        ok,
        format!(
            "eps/2pi = {:.1} kHz, envelope nodes at {} (expected {:?} us), FFT peak split {split:.1} kHz",
            angular_to_khz(p.eps12()),
            found.join(", "),
            NODES_US
        ),
    )
}

fn freq_errors_khz(a: &DeviceParams, b: &DeviceParams) -> [f64; 3] {
    [
        angular_to_khz(a.omega01() - b.omega01()),
        angular_to_khz(a.omega12_plus() - b.omega12_plus()),
        angular_to_khz(a.omega12_minus() - b.omega12_minus()),
    ]
}

fn criterion_5_deterministic_round_trip() -> Check {
    let start = Instant::now();
    let truth = DeviceParams::reference();
    let bounds = ParamBounds::reference();
    let k = khz_to_angular(OFFSET_KHZ);
    let init = truth.with_frequencies(truth.omega01() + k, truth.omega12_plus() + k, truth.omega12_minus() + k).unwrap();
    let problem = FitProblem::new(reference_data([0.0; 4], 0), bounds, init).map_err(|e| e.to_string())?;
    let r = fit(&problem).map_err(|e| e.to_string())?;
    let ferr = freq_errors_khz(&r.theta_hat, &truth);
    let (t1, t2) = r.theta_hat.times().map_err(|e| e.to_string())?;
    let (u1, u2) = truth.times().unwrap();
    let terr = [(t1[0], u1[0]), (t1[1], u1[1]), (t2[0], u2[0]), (t2[1], u2[1])].map(|(a, b)| (a - b).abs() / b);
    let fmax = ferr.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tmax = terr.iter().copied().fold(0.0, f64::max);
    let mut monotone = r.stage_objectives.windows(2).all(|w| w[1] <= w[0] + STAGE_MONOTONE_TOL);
    let mut ok = fmax <= NOISELESS_FREQ_TOL_KHZ && tmax <= NOISELESS_TIME_REL_TOL && bounds.contains_strictly(&r.theta_hat);

    let mut successes = 0;
    let mut worst = Vec::new();
    for seed in 1..=NOISY_SEEDS {
        let data = reference_data([NOISY_SIGMA; 4], seed);
        let problem = FitProblem::from_data(data, bounds).map_err(|e| e.to_string())?;
        let r = fit(&problem).map_err(|e| e.to_string())?;
        monotone &= r.stage_objectives.windows(2).all(|w| w[1] <= w[0] + STAGE_MONOTONE_TOL);
        let e = freq_errors_khz(&r.theta_hat, &truth).iter().map(|v| v.abs()).fold(0.0, f64::max);
        successes += usize::from(e <= NOISY_FREQ_TOL_KHZ);
        worst.push(e);
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= successes >= NOISY_MIN_SUCCESSES && monotone && secs < FIT_SECONDS;
    let worst_noisy = worst.iter().copied().fold(0.0, f64::max);
    ensure(
        ok,
        format!(
            "noiseless: max freq error {fmax:.2e} kHz, max T error {:.2e}%; sigma {NOISY_SIGMA}: {successes}/{NOISY_SEEDS} within \
             {NOISY_FREQ_TOL_KHZ} kHz (worst {worst_noisy:.2} kHz); barrier stages monotone {monotone}; {secs:.0} s",
            100.0 * tmax
        ),
    )
}

fn ramsey_likelihood(sigma: f64, seed: u64) -> RamseyLikelihood {
    let data = reference_data([sigma; 4], seed);
    RamseyLikelihood::new(&data, DeviceParams::reference()).unwrap()
}

fn criterion_6_conjugacy() -> Check {
    let lik = ramsey_likelihood(BAYES_SIGMA, 6);
    let theta = theta_of(&DeviceParams::reference());
    let prior = PriorSpec::default_around(&theta);
    let ssr = lik.ssr(&theta).map_err(|e| e.to_string())?;
    let n = [lik.n_residuals(0), lik.n_residuals(1)];
    let mut ok = n == [750, 750];
    let mut shapes = [(0.0, 0.0); 2];
    for k in 0..2 {
        let (a, b) = tau_posterior(&prior, k, n[k], ssr[k]);
        ok &= a == prior.gamma_shape[k] + 0.5 * n[k] as f64 && b == prior.gamma_rate[k] + 0.5 * ssr[k];
        shapes[k] = (a, b);
    }
    ok &= (shapes[0].0 - 375.01).abs() < 1e-12;

    // log-likelihood + log-prior minus the Gamma(α*, β*) log-density is
    // constant in τ
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut offsets = Vec::new();
    for _ in 0..CONJUGACY_POINTS {
        let tau = [rng.random_range(10.0..300.0), rng.random_range(10.0..300.0)];
        let ll = log_likelihood(&theta, &tau, &lik).map_err(|e| e.to_string())?;
        let log_prior: f64 = (0..2).map(|k| (prior.gamma_shape[k] - 1.0) * tau[k].ln() - prior.gamma_rate[k] * tau[k]).sum();
        let log_post: f64 = (0..2).map(|k| (shapes[k].0 - 1.0) * tau[k].ln() - shapes[k].1 * tau[k]).sum();
        offsets.push(ll + log_prior - log_post);
    }
    let spread = offsets.iter().map(|o| (o - offsets[0]).abs()).fold(0.0, f64::max);
    ok &= spread <= CONJUGACY_TOL;

    let mut draws = [Vec::with_capacity(GIBBS_DRAWS), Vec::with_capacity(GIBBS_DRAWS)];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..GIBBS_DRAWS {
        let t = gibbs_update_tau_from_ssr(&ssr, n, &prior, &mut rng).map_err(|e| e.to_string())?;
        draws[0].push(t[0]);
        draws[1].push(t[1]);
    }
    let mut moment_err = 0.0f64;
    for k in 0..2 {
        let (a, b) = shapes[k];
        let m = draws[k].iter().sum::<f64>() / GIBBS_DRAWS as f64;
        let v = draws[k].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (GIBBS_DRAWS - 1) as f64;
        moment_err = moment_err.max(((m - a / b) / (a / b)).abs()).max(((v - a / (b * b)) / (a / (b * b))).abs());
    }
    ok &= moment_err <= GIBBS_MOMENT_TOL;
    ensure(
        ok,
        format!(
            "shape {:.2} = alpha + 3N_T/2, rate = beta + SSR/2 exactly; conjugacy spread {spread:.1e} over {CONJUGACY_POINTS} points; \
             {GIBBS_DRAWS} draws: worst moment error {:.3}%",
            shapes[0].0,
            100.0 * moment_err
        ),
    )
}

fn criterion_7_mh_correctness() -> Check {
    // 3-point grid with a symmetric proposal to either other point
    let pi: [f64; 3] = [0.2, 0.5, 0.3];
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                p[i][j] = 0.5 * acceptance_probability(pi[i].ln(), pi[j].ln());
            }
        }
        p[i][i] = 1.0 - (0..3).filter(|&j| j != i).map(|j| p[i][j]).sum::<f64>();
    }
    let mut balance = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            balance = balance.max((pi[i] * p[i][j] - pi[j] * p[j][i]).abs());
        }
    }
    let stationary = (0..3).map(|j| ((0..3).map(|i| pi[i] * p[i][j]).sum::<f64>() - pi[j]).abs()).fold(0.0, f64::max);

    let target: [f64; 2] = [0.3, 0.7];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut state = 0usize;
    let mut visits = [0usize; 2];
    for _ in 0..TOY_STEPS {
        let other = 1 - state;
        if metropolis_accept(target[state].ln(), target[other].ln(), &mut rng) {
            state = other;
        }
        visits[state] += 1;
    }
    let freq = visits.map(|v| v as f64 / TOY_STEPS as f64);
    let rel = (0..2).map(|k| ((freq[k] - target[k]) / target[k]).abs()).fold(0.0, f64::max);
    ensure(
        balance <= BALANCE_TOL && stationary <= BALANCE_TOL && rel <= TOY_REL_TOL,
        format!(
            "3-point detailed balance {balance:.1e}, stationarity {stationary:.1e}; two-state visits {:.4}/{:.4} (relative error {:.2}%)",
            freq[0],
            freq[1],
            100.0 * rel
        ),
    )
}

fn criterion_8_bayes_round_trip() -> Check {
    let start = Instant::now();
    let truth = DeviceParams::reference();
    let data = reference_data([BAYES_SIGMA; 4], 8);
    let fitted = fit(&FitProblem::from_data(data.clone(), ParamBounds::reference()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let lik = RamseyLikelihood::new(&data, fitted.theta_hat).map_err(|e| e.to_string())?;
    let prior = PriorSpec::default_around(&theta_of(&fitted.theta_hat));
    let cfg = SamplerConfig { rng_seed: 88, ..SamplerConfig::default() };
    let chain = run_chain(&lik, &prior, &cfg, None, None).map_err(|e| e.to_string())?;
    let s = summarize(&chain).map_err(|e| e.to_string())?;
    let t = theta_of(&truth);
    let mut ok = chain.len() == BAYES_RETAINED && chain.samples.iter().all(|x| prior.contains(&x.theta));
    let mut parts = Vec::new();
    for (i, p) in s.params.iter().enumerate() {
        let z = angular_to_khz(ghz_to_angular(p.mean_ghz) - t[i]) / p.sd_khz;
        ok &= z.abs() <= BAYES_Z_MAX && p.sd_khz >= BAYES_SD_KHZ.0 && p.sd_khz <= BAYES_SD_KHZ.1;
        parts.push(format!("{} S.D. {:.2} kHz z {z:+.2}", p.name, p.sd_khz));
    }
    ok &= s.acceptance_rate > BAYES_ACCEPTANCE.0 && s.acceptance_rate < BAYES_ACCEPTANCE.1;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < BAYES_SECONDS;
    ensure(
        ok,
        format!(
            "sigma {BAYES_SIGMA}, {} retained; {}; acceptance {:.3}; {secs:.0} s",
            chain.len(),
            parts.join(", "),
            s.acceptance_rate
        ),
    )
}

fn random_simplex<R: Rng>(rng: &mut R) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn criterion_9_readout() -> Check {
    let c = ConfusionMatrix::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut inv_err = 0.0f64;
    let mut cases = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.2, 0.5, 0.3]];
    cases.extend((0..100).map(|_| random_simplex(&mut rng)));
    for p in &cases {
        let back = mitigate(&c, &c.apply(p), false).map_err(|e| e.to_string())?;
        inv_err = inv_err.max((0..3).map(|k| (back[k] - p[k]).abs()).fold(0.0, f64::max));
    }

    let model = IqModel::overlapping();
    let training = model.training_set(TRAINING_SHOTS_PER_STATE, &mut rng);
    let gmm = fit_gmm(&training, &mut rng).map_err(|e| e.to_string())?;
    let monotone = gmm.log_likelihood.windows(2).all(|w| w[1] >= w[0] - EM_MONOTONE_TOL * w[0].abs().max(1.0));
    let trained = build_confusion(&gmm, &training).map_err(|e| e.to_string())?;
    let mut within = 0;
    for _ in 0..PIPELINE_TRIALS {
        let p = random_simplex(&mut rng);
        let shots = model.measurement(&p, PIPELINE_SHOTS, &mut rng).map_err(|e| e.to_string())?;
        let est = mitigate_shots(&gmm, &trained, &shots, false).map_err(|e| e.to_string())?;
        let ok = (0..3).all(|k| (est[k] - p[k]).abs() <= 3.0 * (p[k] * (1.0 - p[k]) / PIPELINE_SHOTS as f64).sqrt());
        within += usize::from(ok);
    }
    let fraction = within as f64 / PIPELINE_TRIALS as f64;
    ensure(
        inv_err <= INVERSION_TOL && fraction >= PIPELINE_MIN_FRACTION && monotone,
        format!(
            "confusion inversion error {inv_err:.1e}; pipeline {within}/{PIPELINE_TRIALS} trials within 3 binomial S.D.; \
             EM monotone over {} iterations: {monotone}; trained C diagonal ({:.4}, {:.4}, {:.4})",
            gmm.log_likelihood.len(),
            trained.c[0][0],
            trained.c[1][1],
            trained.c[2][2]
        ),
    )
}

fn cli(args: &[&str], dir: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_qudit-char"))
        .args(args)
        .current_dir(dir)
        .env_remove("QUDIT_CHAR_OUT_DIR")
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn criterion_10_reproducibility() -> Check {
    let lik = ramsey_likelihood(BAYES_SIGMA, 10);
    let prior = PriorSpec::default_around(&theta_of(&DeviceParams::reference()));
    let cfg = SamplerConfig { n_iter: 1000, rng_seed: 5, ..SamplerConfig::default() };
    let a = run_chain(&lik, &prior, &cfg, None, None).map_err(|e| e.to_string())?;
    let b = run_chain(&lik, &prior, &cfg, None, None).map_err(|e| e.to_string())?;
    let chains = a == b;
    let synth = reference_data([0.02; 4], 3) == reference_data([0.02; 4], 3);
    let shots = IqModel::overlapping().training_set(300, &mut ChaCha8Rng::seed_from_u64(1));
    let g1 = fit_gmm(&shots, &mut ChaCha8Rng::seed_from_u64(2)).map_err(|e| e.to_string())?;
    let g2 = fit_gmm(&shots, &mut ChaCha8Rng::seed_from_u64(2)).map_err(|e| e.to_string())?;
    let gmms = g1 == g2;

    // two separate processes
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    std::fs::write(d.join("c.toml"), "[paths]\ndata_dir = \"data\"\n\n[bayes]\nn_iter = 200\n").map_err(|e| e.to_string())?;
    let mut files_equal = true;
    let mut codes = Vec::new();
    for run in ["a", "b"] {
        codes.push(cli(&["synth", "--config", "c.toml", "--sigma", "0.1", "--seed", "7", "--out", &format!("synth_{run}")], d));
    }
    codes.push(cli(&["synth", "--config", "c.toml", "--sigma", "0.1", "--seed", "7", "--out", "data"], d));
    for run in ["a", "b"] {
        codes.push(cli(&["sample", "--config", "c.toml", "--seed", "7", "--draws", "2", "--out", &format!("chain_{run}")], d));
    }
    for (x, y) in [("synth_a/ramsey12.csv", "synth_b/ramsey12.csv"), ("chain_a/chain.csv", "chain_b/chain.csv")] {
        let (x, y) = (std::fs::read(d.join(x)), std::fs::read(d.join(y)));
        files_equal &= matches!((x, y), (Ok(x), Ok(y)) if x == y);
    }
    let codes_ok = codes.iter().all(|&c| c == 0);
    ensure(
        chains && synth && gmms && files_equal && codes_ok,
        format!("chains {chains}, synthetic data {synth}, GMM fits {gmms}, CLI synth/sample files across processes {files_equal}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("1 physics correctness", criterion_1_physics),
        ("2 analytic decay", criterion_2_decay),
        ("3 Ramsey frequency", criterion_3_ramsey_frequency),
        ("4 parity beating", criterion_4_parity_beating),
        ("5 deterministic round trip", criterion_5_deterministic_round_trip),
        ("6 conjugacy exactness", criterion_6_conjugacy),
        ("7 MH correctness", criterion_7_mh_correctness),
        ("8 Bayesian round trip", criterion_8_bayes_round_trip),
        ("9 readout pipeline", criterion_9_readout),
        ("10 reproducibility", criterion_10_reproducibility),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
