use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qudit_char::bayes::{
    log_likelihood, mh_step, params_at, run_chain, summarize, theta_of, Chain, PriorSpec, RamseyLikelihood, SamplerConfig,
    CHAIN_HEADER,
};
use qudit_char::io::{generate_synthetic, ExperimentData};
use qudit_char::lindblad::DeviceParams;
use qudit_char::protocol::{simulate, ProtocolConfig};
use qudit_char::units::khz_to_angular;

fn data(sigma: f64, seed: u64) -> Vec<ExperimentData> {
    let truth = DeviceParams::reference();
    let configs = &ProtocolConfig::reference_set()[..2];
    generate_synthetic(&truth, configs, &[sigma; 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn short_config(seed: u64) -> SamplerConfig {
    SamplerConfig { n_iter: 400, rng_seed: seed, ..SamplerConfig::default() }
}

#[test]
fn log_likelihood_matches_pointwise_gaussian_density() {
    let d = data(0.1, 1);
    let lik = RamseyLikelihood::new(&d, DeviceParams::reference()).unwrap();
    let truth = theta_of(&DeviceParams::reference());
    let theta = [truth[0] + khz_to_angular(3.0), truth[1] - khz_to_angular(2.0), truth[2]];
    let tau = [80.0, 120.0];
    let p = params_at(&theta, lik.rates()).unwrap();
    let mut oracle = 0.0;
    let mut n = 0usize;
    for (k, e) in d.iter().enumerate() {
        let model = simulate(&p, &e.protocol_config()).unwrap();
        for row in 0..3 {
            for j in 1..e.times.len() {
                let r = e.pops[row][j] - model.row(row)[j];
                oracle += 0.5 * (tau[k] / (2.0 * std::f64::consts::PI)).ln() - 0.5 * tau[k] * r * r;
                n += 1;
            }
        }
    }
    let constant = -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let ll = log_likelihood(&theta, &tau, &lik).unwrap();
    assert!((ll + constant - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{ll} + {constant} vs {oracle}");
}

#[test]
fn parity_labels_are_interchangeable() {
    let lik = RamseyLikelihood::new(&data(0.1, 2), DeviceParams::reference()).unwrap();
    let t = theta_of(&DeviceParams::reference());
    assert_eq!(lik.ssr(&t).unwrap(), lik.ssr(&[t[0], t[2], t[1]]).unwrap());
}

#[test]
fn proposals_outside_the_box_are_rejected() {
    let lik = RamseyLikelihood::new(&data(0.1, 3), DeviceParams::reference()).unwrap();
    let t = theta_of(&DeviceParams::reference());
    let prior = PriorSpec::around(&t, khz_to_angular(1.0));
    // any step of a very wide proposal lands outside with high probability
    let wide = [khz_to_angular(1e6); 3];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let (next, accepted) = mh_step(&t, &[100.0, 100.0], &lik, &prior, &wide, &mut rng).unwrap();
        assert!(!accepted);
        assert_eq!(next, t);
    }
}

#[test]
fn start_outside_the_box_is_an_error() {
    let lik = RamseyLikelihood::new(&data(0.1, 3), DeviceParams::reference()).unwrap();
    let t = theta_of(&DeviceParams::reference());
    let prior = PriorSpec::default_around(&t);
    let far = [t[0] + khz_to_angular(5000.0), t[1], t[2]];
    assert!(run_chain(&lik, &prior, &short_config(1), Some(far), None).is_err());
}

#[test]
fn chain_ignores_input_row_order() {
    let d = data(0.1, 5);
    let mut flipped = d.clone();
    flipped.reverse();
    let rates = DeviceParams::reference();
    let prior = PriorSpec::default_around(&theta_of(&rates));
    let a = run_chain(&RamseyLikelihood::new(&d, rates).unwrap(), &prior, &short_config(9), None, None).unwrap();
    let b = run_chain(&RamseyLikelihood::new(&flipped, rates).unwrap(), &prior, &short_config(9), None, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn retained_count_and_indices() {
    let rates = DeviceParams::reference();
    let lik = RamseyLikelihood::new(&data(0.1, 6), rates).unwrap();
    let cfg = short_config(3);
    let chain = run_chain(&lik, &PriorSpec::default_around(&theta_of(&rates)), &cfg, None, None).unwrap();
    assert_eq!(chain.len(), cfg.retained());
    assert_eq!(chain.len(), 100);
    assert_eq!(chain.samples[0].m, 202);
    assert!(chain.samples.windows(2).all(|w| w[1].m == w[0].m + 2));
    assert!(chain.samples.iter().all(|s| s.tau.iter().all(|&t| t > 0.0)));
}

#[test]
fn chain_csv_round_trip() {
    let rates = DeviceParams::reference();
    let lik = RamseyLikelihood::new(&data(0.1, 7), rates).unwrap();
    let chain = run_chain(&lik, &PriorSpec::default_around(&theta_of(&rates)), &short_config(2), None, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.csv");
    chain.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, CHAIN_HEADER.join(","));
    let back = Chain::read_csv(&path).unwrap();
    assert_eq!(back.len(), chain.len());
    assert_eq!(back.acceptance_rate, chain.acceptance_rate);
    for (a, b) in back.samples.iter().zip(&chain.samples) {
        assert_eq!((a.m, a.tau, a.accepted), (b.m, b.tau, b.accepted));
        assert!((0..3).all(|i| (a.theta[i] - b.theta[i]).abs() <= 1e-15 * b.theta[i].abs()));
    }
    let s = summarize(&back).unwrap();
    assert_eq!(s.samples, chain.len());
}
