//! Command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bayes::{
    histograms, predictive_with_configs, run_chain, summarize, theta_of, write_histograms_csv, Chain, RamseyLikelihood,
    HISTOGRAM_BINS,
};
use crate::error::{Error, Result};
use crate::fit::{fit, initialize_from_fft, FitProblem, FitResult, Objective};
use crate::io::config::InitMethod;
use crate::io::{generate_synthetic, read_dataset, read_series_csv, write_dataset, write_series_csv, DataMeta, ExperimentData, RunConfig};
use crate::protocol::{amplitude_spectrum, simulate, PopulationSeries, ProtocolConfig, ProtocolKind};
use crate::readout::{average_shots, build_confusion, fit_gmm, mitigate, read_shots_csv, IqShot};

pub const OUT_DIR_ENV: &str = "QUDIT_CHAR_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "qudit-char", version, about = "Lindblad-model characterization of transmon qudits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write noiseless model series.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        experiment: Option<ProtocolKind>,
    },
    /// Generate noisy synthetic data sets.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Deterministic box-constrained fit of all seven parameters.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Data set directory (with dataset.json).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Markov chain for the three transition frequencies.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// fit.json giving the frozen rates and the prior centre.
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Posterior-predictive simulations to write.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Summarize an existing chain file.
    Summarize {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the IQ classifier, build the confusion matrix and mitigate.
    Mitigate {
        #[command(flatten)]
        common: Common,
        /// Labeled training shots.
        #[arg(long)]
        training: Option<PathBuf>,
        /// Measurement shots to classify and mitigate.
        #[arg(long, conflicts_with = "populations")]
        measured: Option<PathBuf>,
        /// Population series (t_us,p0,p1,p2) to mitigate row by row.
        #[arg(long)]
        populations: Option<PathBuf>,
        #[arg(long)]
        clamp: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Amplitude spectrum of a population row.
    Fft {
        #[command(flatten)]
        common: Common,
        /// Series CSV; the configured experiment is simulated otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<ProtocolKind>,
        /// Population row (level); defaults to the experiment's signal level.
        #[arg(long)]
        row: Option<usize>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common.out.clone().or_else(|| cfg.paths.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn data_dir(arg: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    arg.or_else(|| cfg.paths.data_dir.clone())
        .ok_or_else(|| Error::Config("no data directory: pass --data or set paths.data_dir".into()))
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn data_of(series: PopulationSeries, cfg: &ProtocolConfig, sigma: f64) -> Result<ExperimentData> {
    ExperimentData::from_series(series, cfg.dt, DataMeta::synthetic(cfg.omega_d.map(crate::units::angular_to_ghz), sigma))
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { common, experiment } => cmd_simulate(&common, experiment),
        Command::Synth { common, sigma, seed } => cmd_synth(&common, sigma, seed),
        Command::Fit { common, data } => cmd_fit(&common, data),
        Command::Sample { common, data, fit, seed, draws } => cmd_sample(&common, data, fit, seed, draws),
        Command::Summarize { chain, out } => cmd_summarize(&chain, out),
        Command::Mitigate { common, training, measured, populations, clamp, seed } => {
            cmd_mitigate(&common, training, measured, populations, clamp, seed)
        }
        Command::Fft { common, input, experiment, row } => cmd_fft(&common, input, experiment, row),
    }
}

fn cmd_simulate(common: &Common, experiment: Option<ProtocolKind>) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let p = cfg.device_params()?;
    let out = out_dir(common, &cfg);
    let protocols = match experiment {
        Some(k) => vec![cfg.protocol(k)?],
        None => cfg.protocol_configs()?,
    };
    if is_csv(&out) {
        let series = simulate(&p, &protocols[0])?;
        write_series_csv(&series, &out)?;
        println!("wrote {}", out.display());
        return Ok(());
    }
    let data = protocols.iter().map(|c| data_of(simulate(&p, c)?, c, 0.0)).collect::<Result<Vec<_>>>()?;
    for f in write_dataset(&out, &data)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_synth(common: &Common, sigma: Option<f64>, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let p = cfg.device_params()?;
    let protocols = cfg.protocol_configs()?;
    let sigmas = match sigma {
        Some(s) if s >= 0.0 && s.is_finite() => vec![s; protocols.len()],
        Some(s) => return Err(Error::Config(format!("--sigma must be >= 0, got {s}"))),
        None => cfg.sigmas(protocols.len())?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.or(cfg.synth.seed).unwrap_or(0));
    let data = generate_synthetic(&p, &protocols, &sigmas, &mut rng)?;
    let out = out_dir(common, &cfg);
    for f in write_dataset(&out, &data)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_fit(common: &Common, data: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let data = read_dataset(&data_dir(data, &cfg)?)?;
    let bounds = cfg.bounds()?;
    let init = match cfg.fit.init {
        InitMethod::Fft => initialize_from_fft(&data, &bounds)?,
        InitMethod::Device => cfg.device_params()?,
    };
    let problem = FitProblem { objective: Objective::new(data)?, bounds, init, options: cfg.fit_options()? };
    let result = fit(&problem)?;
    let out = out_dir(common, &cfg);
    ensure_dir(&out)?;
    let table = result.table()?;
    result.write_json(&out.join("fit.json"))?;
    fs::write(out.join("fit_table.txt"), &table).map_err(|e| Error::io(out.join("fit_table.txt"), e))?;
    print!("{table}");
    Ok(())
}

fn cmd_sample(common: &Common, data: Option<PathBuf>, fit_path: Option<PathBuf>, seed: Option<u64>, draws: Option<usize>) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let data = read_dataset(&data_dir(data, &cfg)?)?;
    let point = match fit_path.or_else(|| cfg.paths.fit_result.clone()) {
        Some(p) => FitResult::read_json(&p)?.theta_hat,
        None => cfg.device_params()?,
    };
    let include_j0 = cfg.bayes.include_j0.unwrap_or(false);
    let lik = RamseyLikelihood::new(&data, point)?.with_j0(include_j0);
    let prior = cfg.prior(&theta_of(&point))?;
    let mut sampler = cfg.sampler_config()?;
    if let Some(s) = seed {
        sampler.rng_seed = s;
    }
    let chain = run_chain(&lik, &prior, &sampler, None, None)?;
    let summary = summarize(&chain)?;

    let out = out_dir(common, &cfg);
    ensure_dir(&out)?;
    chain.write_csv(&out.join("chain.csv"))?;
    summary.write_json(&out.join("summary.json"))?;
    write_histograms_csv(&histograms(&chain, HISTOGRAM_BINS)?, &out.join("histograms.csv"))?;

    let n_draws = draws.or(cfg.bayes.draws).unwrap_or(200).min(chain.len());
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.rng_seed.wrapping_add(1));
    let pred = predictive_with_configs(&chain, n_draws, lik.rates(), lik.configs(), &mut rng)?;
    for (k, kind) in [ProtocolKind::Ramsey01, ProtocolKind::Ramsey12].into_iter().enumerate() {
        let path = out.join(format!("predictive_{kind}.csv"));
        write_predictive(&path, pred.iter().map(|d| &d[k]))?;
    }
    print!("{}", summary.table());
    Ok(())
}

fn write_predictive<'a>(path: &Path, series: impl Iterator<Item = &'a PopulationSeries>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::io::data::csv_error(path, e))?;
    w.write_record(["draw", "t_us", "p0", "p1", "p2"]).map_err(|e| crate::io::data::csv_error(path, e))?;
    for (d, s) in series.enumerate() {
        for j in 0..s.len() {
            w.write_record([
                d.to_string(),
                s.times[j].to_string(),
                s.pops[0][j].to_string(),
                s.pops[1][j].to_string(),
                s.pops[2][j].to_string(),
            ])
            .map_err(|e| crate::io::data::csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cmd_summarize(chain: &Path, out: Option<PathBuf>) -> Result<()> {
    let chain = Chain::read_csv(chain)?;
    let summary = summarize(&chain)?;
    if let Some(out) = out {
        summary.write_json(&out)?;
    }
    print!("{}", summary.table());
    Ok(())
}

fn cmd_mitigate(
    common: &Common,
    training: Option<PathBuf>,
    measured: Option<PathBuf>,
    populations: Option<PathBuf>,
    clamp: bool,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let training = training
        .or_else(|| cfg.mitigate.training.clone())
        .ok_or_else(|| Error::Config("no training shots: pass --training or set mitigate.training".into()))?;
    let clamp = clamp || cfg.mitigate.clamp.unwrap_or(false);
    let train = read_shots_csv(&training)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.or(cfg.mitigate.seed).unwrap_or(0));
    let gmm = fit_gmm(&train, &mut rng)?;
    let confusion = build_confusion(&gmm, &train)?;

    let out = out_dir(common, &cfg);
    ensure_dir(&out)?;
    gmm.write_json(&out.join("gmm.json"))?;
    confusion.write_json(&out.join("confusion.json"))?;
    println!("confusion matrix (condition number {:.4}):", confusion.condition_number());
    for row in &confusion.c {
        println!("  {:.6e} {:.6e} {:.6e}", row[0], row[1], row[2]);
    }

    if let Some(path) = populations {
        let mut series = read_series_csv(&path, ProtocolKind::Ramsey01)?;
        for j in 0..series.len() {
            let p = mitigate(&confusion, &[series.pops[0][j], series.pops[1][j], series.pops[2][j]], clamp)?;
            for k in 0..3 {
                series.pops[k][j] = p[k];
            }
        }
        let dest = out.join("mitigated.csv");
        write_series_csv(&series, &dest)?;
        println!("wrote {}", dest.display());
    } else if let Some(path) = measured.or_else(|| cfg.mitigate.measured.clone()) {
        let shots = read_shots_csv(&path)?;
        let per_shot: Vec<[f64; 3]> = shots.iter().map(|s: &IqShot| gmm.classify(s)).collect();
        let raw = average_shots(&per_shot)?;
        let p = mitigate(&confusion, &raw, clamp)?;
        let dest = out.join("mitigated.csv");
        let mut f = fs::File::create(&dest).map_err(|e| Error::io(&dest, e))?;
        writeln!(f, "quantity,p0,p1,p2\nmeasured,{},{},{}\nmitigated,{},{},{}", raw[0], raw[1], raw[2], p[0], p[1], p[2])
            .map_err(|e| Error::io(&dest, e))?;
        println!("measured  {:.6} {:.6} {:.6}", raw[0], raw[1], raw[2]);
        println!("mitigated {:.6} {:.6} {:.6}", p[0], p[1], p[2]);
    }
    Ok(())
}

fn cmd_fft(common: &Common, input: Option<PathBuf>, experiment: Option<ProtocolKind>, row: Option<usize>) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let kind = experiment.unwrap_or(ProtocolKind::Ramsey12);
    let series = match &input {
        Some(p) => read_series_csv(p, kind)?,
        None => simulate(&cfg.device_params()?, &cfg.protocol(kind)?)?,
    };
    if series.len() < 2 {
        return Err(Error::InsufficientData("spectrum needs at least two samples".into()));
    }
    let row = row.unwrap_or(kind.signal_level());
    if row > 2 {
        return Err(Error::Config(format!("--row must be 0, 1 or 2, got {row}")));
    }
    let dt = series.times[1] - series.times[0];
    let spec = amplitude_spectrum(series.row(row), dt)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("spectrum.csv"));
    let dest = if is_csv(&out) {
        out
    } else {
        ensure_dir(&out)?;
        out.join("spectrum.csv")
    };
    let mut w = csv::Writer::from_path(&dest).map_err(|e| crate::io::data::csv_error(&dest, e))?;
    w.write_record(["freq_mhz", "magnitude"]).map_err(|e| crate::io::data::csv_error(&dest, e))?;
    for (f, m) in spec.freqs_mhz.iter().zip(&spec.magnitudes) {
        w.write_record([f.to_string(), m.to_string()]).map_err(|e| crate::io::data::csv_error(&dest, e))?;
    }
    w.flush().map_err(|e| Error::io(&dest, e))?;
    for k in spec.significant_peaks(crate::fit::init::PEAK_FACTOR).iter().take(2) {
        println!("peak {:.1} kHz", 1e3 * spec.interpolated_frequency(*k));
    }
    println!("wrote {}", dest.display());
    Ok(())
}
