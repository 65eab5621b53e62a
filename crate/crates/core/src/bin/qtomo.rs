//! Command-line front end: simulate data, run estimators, tune step sizes,
//! benchmark the samplers and run replicated experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qtomo::estimate::{linear_inversion, maee, mse, project_to_density, Method};
use qtomo::harness::{self, io as qio, BenchmarkOptions, ExperimentSpec, RunOptions, SamplerChoice, StateSpec, Tuning};
use qtomo::linalg::CMatrix;
use qtomo::model::ModelConfig;
use qtomo::qcore::{empirical_frequencies, simulate_counts, CountTable, ProbTable};
use qtomo::samplers::{run_adaptive_mh, run_naive_mh, tune_betas_with, SamplerConfig, TuneOptions, TuneResult};
use qtomo::Result;

#[derive(Parser)]
#[command(name = "qtomo", version, about = "Bayesian quantum state tomography from Pauli measurement counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a count table from a reference state.
    Simulate(SimulateArgs),
    /// Estimate a density matrix from a count table.
    Estimate(EstimateArgs),
    /// Time sampler steps for several qubit counts (CSV: n,method,steps,seconds,evals).
    Benchmark(BenchmarkArgs),
    /// Tune the adaptive sampler's step sizes on a count table.
    Tune(TuneArgs),
    /// Write a reference density matrix.
    TrueState(TrueStateArgs),
    /// Run replicated chains against a reference state and write a manifest.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StateArg {
    Rank2,
    Mixed,
}

impl StateArg {
    fn spec(self) -> StateSpec {
        match self {
            StateArg::Rank2 => StateSpec::Rank2,
            StateArg::Mixed => StateSpec::Mixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Amh,
    Rmh,
    /// Linear inversion.
    Li,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Amh,
    Rmh,
    Both,
}

#[derive(Args)]
struct ModelArgs {
    /// Gamma shape of the weight prior.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Inverse temperature; defaults to m/2.
    #[arg(long)]
    lambda: Option<f64>,
}

impl ModelArgs {
    fn config(&self, m: u64) -> Result<ModelConfig> {
        ModelConfig::exploratory(self.alpha, self.lambda.unwrap_or(m as f64 / 2.0))
    }
}

#[derive(Args)]
struct StepArgs {
    /// Weight step size; pass with --beta-z to skip tuning.
    #[arg(long, requires = "beta_z")]
    beta_y: Option<f64>,
    /// Vector step size; pass with --beta-y to skip tuning.
    #[arg(long, requires = "beta_y")]
    beta_z: Option<f64>,
    /// Acceptance rate targeted when tuning.
    #[arg(long, default_value_t = 0.3)]
    tune_target: f64,
}

impl StepArgs {
    fn explicit(&self) -> Option<(f64, f64)> {
        Some((self.beta_y?, self.beta_z?))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    /// Shots per setting.
    #[arg(long, default_value_t = 1000)]
    m: u64,
    #[arg(long, value_enum, default_value_t = StateArg::Rank2)]
    state: StateArg,
    /// Seed for the measurement draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the mixed reference state.
    #[arg(long, default_value_t = 0)]
    state_seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Count table CSV (setting,outcome,count).
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Amh)]
    sampler: EstimatorArg,
    /// Iterations (amh) or sweeps (rmh).
    #[arg(long = "T", default_value_t = 30_000)]
    iterations: usize,
    /// Discarded iterations; defaults to T/10.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    steps: StepArgs,
    /// Clip and renormalise the linear-inversion estimate to a valid state.
    #[arg(long)]
    project: bool,
    /// Reference density CSV; adds MSE and MAEE to the manifest.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output density CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON manifest describing the run.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Qubit counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 6])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    m: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.03)]
    beta_y: f64,
    #[arg(long, default_value_t = 0.02)]
    beta_z: f64,
    #[command(flatten)]
    model: ModelArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    target: f64,
    #[arg(long, default_value_t = 500)]
    pilot_len: usize,
    #[arg(long, default_value_t = 30)]
    max_rounds: usize,
    /// Starting weight step size.
    #[arg(long, default_value_t = 0.3)]
    beta_y: f64,
    /// Starting vector step size.
    #[arg(long, default_value_t = 0.2)]
    beta_z: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct TrueStateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = StateArg::Rank2)]
    state: StateArg,
    /// Seed for the mixed state.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    m: u64,
    /// rank2, mixed, or a density CSV path.
    #[arg(long, default_value = "rank2")]
    state: StateSpec,
    #[arg(long, value_enum, default_value_t = SamplerArg::Both)]
    sampler: SamplerArg,
    #[arg(long = "T", default_value_t = 30_000)]
    iterations: usize,
    /// Discarded iterations; defaults to T/10.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use one data set for all chains.
    #[arg(long)]
    shared_data: bool,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    steps: StepArgs,
    /// Concurrent chains; overrides QTOMO_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for manifest.json and the CSVs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct EstimateManifest {
    software: String,
    counts: PathBuf,
    method: Method,
    n: usize,
    m: u64,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    alpha: f64,
    lambda: f64,
    beta_y: Option<f64>,
    beta_z: Option<f64>,
    tuning: Option<TuneResult>,
    acceptance_rate: Option<f64>,
    evaluations: u64,
    wall_time: f64,
    projected: bool,
    mse: Option<f64>,
    maee: Option<f64>,
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn tune(p_hat: &ProbTable, model: ModelConfig, target: f64, seed: u64) -> Result<TuneResult> {
    let cfg = SamplerConfig::new(0.3, 0.2, 1, seed, model);
    tune_betas_with(p_hat, &cfg, &TuneOptions::new(target))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let truth = harness::build_state(&a.state.spec(), a.n, a.state_seed)?;
    let counts = simulate_counts(&truth, a.m, a.seed)?;
    qio::write_counts(writer(a.out.as_deref())?, &counts)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let counts: CountTable = qio::load_counts(&a.counts)?;
    let m = counts.shots_per_setting();
    let p_hat = empirical_frequencies(&counts);
    let model = a.model.config(m)?;
    let burn_in = a.burn_in.unwrap_or(a.iterations / 10);
    let mut manifest = EstimateManifest {
        software: format!("qtomo {}", env!("CARGO_PKG_VERSION")),
        counts: a.counts.clone(),
        method: Method::LinearInversion,
        n: counts.dims().n,
        m,
        iterations: a.iterations,
        burn_in,
        seed: a.seed,
        alpha: model.alpha,
        lambda: model.lambda,
        beta_y: None,
        beta_z: None,
        tuning: None,
        acceptance_rate: None,
        evaluations: 0,
        wall_time: 0.0,
        projected: false,
        mse: None,
        maee: None,
    };

    let rho_hat: CMatrix = match a.sampler {
        EstimatorArg::Li => {
            let started = std::time::Instant::now();
            let li = linear_inversion(&p_hat);
            let li = if a.project {
                manifest.projected = true;
                project_to_density(&li)?.into_matrix()
            } else {
                li
            };
            manifest.wall_time = started.elapsed().as_secs_f64();
            li
        }
        EstimatorArg::Amh | EstimatorArg::Rmh => {
            let (by, bz) = match a.steps.explicit() {
                Some(b) => b,
                None => {
                    let res = tune(&p_hat, model, a.steps.tune_target, a.seed)?;
                    let b = (res.beta_y, res.beta_z);
                    manifest.tuning = Some(res);
                    b
                }
            };
            let cfg = SamplerConfig::new(by, bz, a.iterations, a.seed, model).with_burn_in(burn_in);
            let (method, out) = match a.sampler {
                EstimatorArg::Amh => (Method::Amh, run_adaptive_mh(&p_hat, &cfg)?),
                _ => (Method::Rmh, run_naive_mh(&p_hat, &cfg)?),
            };
            manifest.method = method;
            manifest.beta_y = Some(by);
            manifest.beta_z = Some(bz);
            manifest.acceptance_rate = Some(out.acceptance_rate);
            manifest.evaluations = out.evaluations;
            manifest.wall_time = out.wall_time;
            out.rho_hat.into_matrix()
        }
    };

    if let Some(path) = &a.truth {
        let truth = qio::load_matrix(path)?;
        manifest.mse = Some(mse(&rho_hat, &truth)?);
        manifest.maee = Some(maee(&rho_hat, &truth)?);
    }
    qio::write_matrix(writer(a.out.as_deref())?, &rho_hat)?;
    if let Some(path) = &a.manifest {
        qio::save_json(path, &manifest)?;
    }
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let opts = BenchmarkOptions {
        m: a.m,
        seed: a.seed,
        beta_y: a.beta_y,
        beta_z: a.beta_z,
        alpha: a.model.alpha,
        lambda: a.model.lambda,
    };
    let rows = harness::benchmark_runtime(&a.n, a.steps, &opts)?;
    for &n in &a.n {
        if let Some(r) = harness::speedup(&rows, n) {
            eprintln!("n = {n}: rmh / amh time ratio {r:.1}");
        }
    }
    harness::write_timing_csv(writer(a.out.as_deref())?, &rows)
}

fn tune_cmd(a: TuneArgs) -> Result<()> {
    let counts = qio::load_counts(&a.counts)?;
    let p_hat = empirical_frequencies(&counts);
    let model = a.model.config(counts.shots_per_setting())?;
    let cfg = SamplerConfig::new(a.beta_y, a.beta_z, 1, a.seed, model);
    let opts = TuneOptions { pilot_len: a.pilot_len, max_rounds: a.max_rounds, ..TuneOptions::new(a.target) };
    let res = tune_betas_with(&p_hat, &cfg, &opts)?;
    println!("beta_y = {}", res.beta_y);
    println!("beta_z = {}", res.beta_z);
    println!(
        "acceptance = {:.4} after {} rounds{}",
        res.acceptance,
        res.rounds,
        if res.converged { "" } else { " (not converged)" }
    );
    Ok(())
}

fn true_state(a: TrueStateArgs) -> Result<()> {
    let rho = harness::build_state(&a.state.spec(), a.n, a.seed)?;
    qio::write_matrix(writer(a.out.as_deref())?, rho.matrix())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let tuning = match a.steps.explicit() {
        Some((beta_y, beta_z)) => Tuning::Explicit { beta_y, beta_z },
        None => Tuning::auto(a.steps.tune_target),
    };
    let spec = ExperimentSpec {
        n: a.n,
        m: a.m,
        state: a.state,
        sampler: match a.sampler {
            SamplerArg::Amh => SamplerChoice::Amh,
            SamplerArg::Rmh => SamplerChoice::Rmh,
            SamplerArg::Both => SamplerChoice::Both,
        },
        alpha: a.model.alpha,
        lambda: a.model.lambda,
        tuning,
        iterations: a.iterations,
        burn_in: a.burn_in.unwrap_or(a.iterations / 10),
        chains: a.chains,
        master_seed: a.seed,
        shared_data: a.shared_data,
    };
    let record = harness::run_experiment_with(&spec, &RunOptions { threads: a.threads, out_dir: a.out_dir })?;
    println!("method            chains  mean MSE      std MSE       mean MAEE     std MAEE      acceptance");
    for agg in &record.aggregates {
        println!(
            "{:<17} {:>6}  {:<12.6e}  {:<12.6e}  {:<12.6e}  {:<12.6e}  {:.3}",
            agg.method.label(),
            agg.chains,
            agg.mean_mse,
            agg.std_mse,
            agg.mean_maee,
            agg.std_maee,
            agg.mean_acceptance
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Tune(a) => tune_cmd(a),
        Command::TrueState(a) => true_state(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
