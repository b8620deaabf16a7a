use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qudit_char::fit::{gradient, initialize_from_fft, log_linear_rate, objective, Objective, ParamBounds, N_PARAMS};
use qudit_char::io::{generate_synthetic, DataMeta, ExperimentData};
use qudit_char::lindblad::DeviceParams;
use qudit_char::protocol::{simulate, ProtocolConfig, ProtocolKind};
use qudit_char::units::{angular_to_khz, khz_to_angular, khz_to_rate};

fn noiseless() -> Vec<ExperimentData> {
    generate_synthetic(&DeviceParams::reference(), &ProtocolConfig::reference_set(), &[0.0; 4], &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap()
}

fn scaled_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn objective_vanishes_at_truth() {
    let j = objective(&DeviceParams::reference(), &noiseless()).unwrap();
    assert!(j <= 1e-16, "J = {j:e}");
}

#[test]
fn zero_data_decay_objective_counts_every_point() {
    let p = DeviceParams::reference().with_rates([0.0; 3], [0.0; 3]).unwrap();
    let cfg = ProtocolConfig::decay(ProtocolKind::Decay1);
    let zeros = ExperimentData {
        kind: ProtocolKind::Decay1,
        dt: cfg.dt,
        times: cfg.times(),
        pops: [vec![0.0; 501], vec![0.0; 501], vec![0.0; 501]],
        meta: DataMeta::synthetic(None, 0.0),
    };
    let j = objective(&p, &[zeros]).unwrap();
    assert!((j - cfg.dt * 501.0).abs() < 1e-12, "J = {j}");
}

#[test]
fn truth_is_a_local_minimum_along_each_frequency() {
    let data = noiseless();
    let truth = DeviceParams::reference();
    let j0 = objective(&truth, &data).unwrap();
    for delta in [-20.0, -5.0, 5.0, 20.0] {
        let d = khz_to_angular(delta);
        for k in 0..3 {
            let mut f = [truth.omega01(), truth.omega12_plus(), truth.omega12_minus()];
            f[k] += d;
            let p = truth.with_frequencies(f[0], f[1].max(f[2]), f[1].min(f[2])).unwrap();
            assert!(objective(&p, &data).unwrap() > j0, "offset {delta} kHz on frequency {k}");
        }
    }
}

#[test]
fn gradient_vanishes_at_truth() {
    let obj = Objective::new(noiseless()).unwrap();
    let g = gradient(&DeviceParams::reference(), &obj, &ParamBounds::reference()).unwrap();
    assert!(scaled_norm(&g) <= 1e-6, "{g:?}");
}

#[test]
fn gradient_matches_secant_along_random_direction() {
    let bounds = ParamBounds::reference();
    let obj = Objective::new(noiseless()).unwrap();
    let truth = DeviceParams::reference();
    let k = khz_to_angular(40.0);
    let p = truth.with_frequencies(truth.omega01() + k, truth.omega12_plus() - k, truth.omega12_minus() + 0.5 * k).unwrap();
    let g = gradient(&p, &obj, &bounds).unwrap();
    let x = bounds.to_scaled(&p);
    let d = [0.3, -0.2, 0.5, 0.01, -0.02, 0.015, 0.01];
    let h = 1e-3;
    let at = |s: f64| {
        let y: [f64; N_PARAMS] = std::array::from_fn(|i| x[i] + s * d[i]);
        obj.value_scaled(&bounds, &y, &p).unwrap()
    };
    let secant = (at(h) - at(-h)) / (2.0 * h);
    let directional: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
    let scale = scaled_norm(&g) * scaled_norm(&d);
    assert!((secant - directional).abs() <= 1e-5 * scale, "{secant} vs {directional}");
}

#[test]
fn fft_initializer_lands_near_the_truth() {
    let bounds = ParamBounds::reference();
    let truth = DeviceParams::reference();
    let init = initialize_from_fft(&noiseless(), &bounds).unwrap();
    assert!(bounds.contains_strictly(&init));
    for (a, b) in [
        (init.omega01(), truth.omega01()),
        (init.omega12_plus(), truth.omega12_plus()),
        (init.omega12_minus(), truth.omega12_minus()),
    ] {
        assert!(angular_to_khz(a - b).abs() <= 200.0, "{} kHz", angular_to_khz(a - b));
    }
}

#[test]
fn log_linear_rate_recovers_t1() {
    let p = DeviceParams::reference().with_rates([khz_to_rate(10.0), 0.02, 0.02], [0.0; 3]).unwrap();
    let s = simulate(&p, &ProtocolConfig::decay(ProtocolKind::Decay1)).unwrap();
    let rate = log_linear_rate(&s.times, s.row(1)).unwrap();
    assert!((1.0 / rate - 100.0).abs() <= 5.0, "T1 = {}", 1.0 / rate);
}

#[test]
fn flat_data_gives_box_centres() {
    let bounds = ParamBounds::reference();
    let data: Vec<ExperimentData> = ProtocolConfig::reference_set()
        .iter()
        .map(|cfg| ExperimentData {
            kind: cfg.kind,
            dt: cfg.dt,
            times: cfg.times(),
            pops: [vec![0.5; cfg.n_steps + 1], vec![0.5; cfg.n_steps + 1], vec![0.0; cfg.n_steps + 1]],
            meta: DataMeta::synthetic(cfg.omega_d.map(qudit_char::units::angular_to_ghz), 0.0),
        })
        .collect();
    let init = initialize_from_fft(&data, &bounds).unwrap();
    let got = ParamBounds::physical(&init);
    let want = ParamBounds::physical(&bounds.center_params());
    for i in 0..3 {
        assert!((got[i] - want[i]).abs() <= 1e-9 * want[i].abs().max(1.0), "{i}: {} vs {}", got[i], want[i]);
    }
}

#[test]
fn mismatched_grid_is_rejected() {
    let mut data = noiseless();
    data[0].times.pop();
    data[0].pops.iter_mut().for_each(|r| {
        r.pop();
    });
    let configs = ProtocolConfig::reference_set().to_vec();
    assert!(Objective::with_configs(data, configs).is_err());
}
