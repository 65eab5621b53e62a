use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_state, io, threads_from_env};
use crate::estimate::{linear_inversion, maee, mse, Method};
use crate::linalg::CMatrix;
use crate::model::ModelConfig;
use crate::qcore::{empirical_frequencies, simulate_counts, CountTable, DensityMatrix};
use crate::rng::derive_seed;
use crate::samplers::{run_adaptive_mh, run_naive_mh, tune_betas_with, ChainOutput, SamplerConfig, TuneOptions, TuneResult};
use crate::{Error, Result};

// Reserved stream indices under the master seed; chain i uses stream i.
const TRUTH_STREAM: u64 = u64::MAX;
const TUNE_STREAM: u64 = u64::MAX - 1;
const SHARED_DATA_STREAM: u64 = u64::MAX - 2;
// Sub-streams under a chain seed.
const DATA_SUBSTREAM: u64 = 0;
const AMH_SUBSTREAM: u64 = 1;
const RMH_SUBSTREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpec {
    Rank2,
    Mixed,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    Amh,
    Rmh,
    Both,
}

impl SamplerChoice {
    pub fn methods(self) -> &'static [Method] {
        match self {
            SamplerChoice::Amh => &[Method::Amh],
            SamplerChoice::Rmh => &[Method::Rmh],
            SamplerChoice::Both => &[Method::Amh, Method::Rmh],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Tuning {
    Explicit { beta_y: f64, beta_z: f64 },
    /// Pilot tuning toward `target`, starting from `(0.3, 0.2)`.
    Auto { target: f64, pilot_len: usize, max_rounds: usize },
}

impl Tuning {
    pub fn auto(target: f64) -> Self {
        Tuning::Auto { target, pilot_len: 500, max_rounds: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n: usize,
    /// Shots per setting.
    pub m: u64,
    pub state: StateSpec,
    pub sampler: SamplerChoice,
    pub alpha: f64,
    /// `None` means `m / 2`.
    pub lambda: Option<f64>,
    pub tuning: Tuning,
    /// Iterations (adaptive) or sweeps (naive) per chain.
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub master_seed: u64,
    /// Reuse one data set for every chain instead of simulating fresh data.
    pub shared_data: bool,
}

impl ExperimentSpec {
    /// Defaults: m = 1000, rank-2 truth, both samplers, alpha = 1,
    /// lambda = m/2, tuning to acceptance 0.3, T = 30000 with 10% burn-in.
    pub fn new(n: usize) -> Self {
        ExperimentSpec {
            n,
            m: 1000,
            state: StateSpec::Rank2,
            sampler: SamplerChoice::Both,
            alpha: 1.0,
            lambda: None,
            tuning: Tuning::auto(0.3),
            iterations: 30_000,
            burn_in: 3_000,
            chains: 1,
            master_seed: 0,
            shared_data: false,
        }
    }

    /// Sets T and a 10% burn-in.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = iterations / 10;
        self
    }

    pub fn model(&self) -> Result<ModelConfig> {
        let lambda = self.lambda.unwrap_or(self.m as f64 / 2.0);
        ModelConfig::exploratory(self.alpha, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        crate::qcore::Dimensions::new(self.n)?;
        if self.m == 0 || self.chains == 0 {
            return Err(Error::config("m and the chain count must be positive"));
        }
        self.model()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Concurrent chains; falls back to `QTOMO_THREADS`, then all cores.
    pub threads: Option<usize>,
    /// Where to write the manifest and CSVs; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub chain: usize,
    pub method: Method,
    pub data_seed: u64,
    pub sampler_seed: u64,
    pub mse: f64,
    pub maee: f64,
    /// Post-burn-in acceptance rate (0 for linear inversion).
    pub acceptance_rate: f64,
    pub full_chain_acceptance_rate: f64,
    pub wall_time: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub chains: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub mean_maee: f64,
    pub std_maee: f64,
    pub mean_acceptance: f64,
}

impl Aggregate {
    fn from_rows(method: Method, rows: &[&ChainRow]) -> Self {
        let (mean_mse, std_mse) = mean_std(rows.iter().map(|r| r.mse));
        let (mean_maee, std_maee) = mean_std(rows.iter().map(|r| r.maee));
        let (mean_acceptance, _) = mean_std(rows.iter().map(|r| r.acceptance_rate));
        Aggregate { method, chains: rows.len(), mean_mse, std_mse, mean_maee, std_maee, mean_acceptance }
    }
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    /// Mean over chains of wall time scaled to 10 iterations (sweeps).
    pub seconds_per_10_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSettings {
    pub lambda: f64,
    pub alpha: f64,
    pub beta_y: f64,
    pub beta_z: f64,
    pub tuning: Option<TuneResult>,
    pub seed_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub software: String,
    pub spec: ExperimentSpec,
    pub resolved: ResolvedSettings,
    pub chains: Vec<ChainRow>,
    /// Linear inversion on each chain's data set, for reference.
    pub linear_inversion: Vec<ChainRow>,
    pub aggregates: Vec<Aggregate>,
    pub timing: Vec<MethodTiming>,
}

impl RunRecord {
    pub fn aggregate(&self, method: Method) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn rows(&self, method: Method) -> impl Iterator<Item = &ChainRow> {
        self.chains
            .iter()
            .chain(&self.linear_inversion)
            .filter(move |r| r.method == method)
    }

    fn compute_aggregates(chains: &[ChainRow], baseline: &[ChainRow], methods: &[Method]) -> Vec<Aggregate> {
        methods
            .iter()
            .chain(std::iter::once(&Method::LinearInversion))
            .map(|&m| {
                let rows: Vec<&ChainRow> = chains.iter().chain(baseline).filter(|r| r.method == m).collect();
                Aggregate::from_rows(m, &rows)
            })
            .collect()
    }

    /// Copy with every wall-clock field zeroed; everything left is a
    /// deterministic function of the spec.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for row in out.chains.iter_mut().chain(out.linear_inversion.iter_mut()) {
            row.wall_time = 0.0;
        }
        for t in &mut out.timing {
            t.seconds_per_10_steps = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a manifest and checks that its aggregates match its rows.
    pub fn from_json(text: &str) -> Result<Self> {
        let record: RunRecord = serde_json::from_str(text)?;
        record.check_aggregates()?;
        Ok(record)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn check_aggregates(&self) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        for agg in &self.aggregates {
            let rows: Vec<&ChainRow> = self.rows(agg.method).collect();
            let fresh = Aggregate::from_rows(agg.method, &rows);
            let ok = fresh.chains == agg.chains
                && close(fresh.mean_mse, agg.mean_mse)
                && close(fresh.std_mse, agg.std_mse)
                && close(fresh.mean_maee, agg.mean_maee)
                && close(fresh.std_maee, agg.std_maee)
                && close(fresh.mean_acceptance, agg.mean_acceptance);
            if !ok {
                return Err(Error::parse(format!(
                    "aggregate for {} does not match its chain rows",
                    agg.method
                )));
            }
        }
        Ok(())
    }
}

struct ChainResult {
    counts: CountTable,
    rows: Vec<ChainRow>,
    baseline: ChainRow,
    estimates: Vec<(Method, CMatrix)>,
}

fn score(rho_hat: &CMatrix, truth: &DensityMatrix) -> Result<(f64, f64)> {
    Ok((mse(rho_hat, truth.matrix())?, maee(rho_hat, truth.matrix())?))
}

fn run_chain(
    spec: &ExperimentSpec,
    truth: &DensityMatrix,
    model: ModelConfig,
    betas: (f64, f64),
    index: usize,
) -> Result<ChainResult> {
    let chain_seed = derive_seed(spec.master_seed, index as u64);
    let data_seed = if spec.shared_data {
        derive_seed(spec.master_seed, SHARED_DATA_STREAM)
    } else {
        derive_seed(chain_seed, DATA_SUBSTREAM)
    };
    let counts = simulate_counts(truth, spec.m, data_seed)?;
    let p_hat = empirical_frequencies(&counts);
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for &method in spec.sampler.methods() {
        let (substream, runner): (u64, fn(_, _) -> Result<ChainOutput>) = match method {
            Method::Amh => (AMH_SUBSTREAM, run_adaptive_mh),
            _ => (RMH_SUBSTREAM, run_naive_mh),
        };
        let sampler_seed = derive_seed(chain_seed, substream);
        let cfg = SamplerConfig::new(betas.0, betas.1, spec.iterations, sampler_seed, model).with_burn_in(spec.burn_in);
        let out = runner(&p_hat, &cfg)?;
        let (mse, maee) = score(out.rho_hat.matrix(), truth)?;
        rows.push(ChainRow {
            chain: index,
            method,
            data_seed,
            sampler_seed,
            mse,
            maee,
            acceptance_rate: out.acceptance_rate,
            full_chain_acceptance_rate: out.full_chain_acceptance_rate,
            wall_time: out.wall_time,
            evaluations: out.evaluations,
        });
        estimates.push((method, out.rho_hat.into_matrix()));
    }
    let started = Instant::now();
    let li = linear_inversion(&p_hat);
    let wall_time = started.elapsed().as_secs_f64();
    let (mse, maee) = score(&li, truth)?;
    let baseline = ChainRow {
        chain: index,
        method: Method::LinearInversion,
        data_seed,
        sampler_seed: 0,
        mse,
        maee,
        acceptance_rate: 0.0,
        full_chain_acceptance_rate: 0.0,
        wall_time,
        evaluations: 0,
    };
    estimates.push((Method::LinearInversion, li));
    Ok(ChainResult { counts, rows, baseline, estimates })
}

/// [`run_experiment_with`] using `QTOMO_THREADS` and writing to `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<RunRecord> {
    run_experiment_with(spec, &RunOptions { threads: None, out_dir: out_dir.map(Path::to_path_buf) })
}

/// Builds the truth, then for each chain simulates data, runs the requested
/// samplers and linear inversion, and scores them. Chains run concurrently
/// and are ordered by index before aggregation, so the record does not depend
/// on the thread count.
///
/// Seeds: chain `i` uses `c_i = derive_seed(master, i)`; its data use
/// `derive_seed(c_i, 0)` and the adaptive / naive samplers
/// `derive_seed(c_i, 1)` / `derive_seed(c_i, 2)`. The mixed truth, the tuning
/// data and shared data use the reserved streams `u64::MAX`, `u64::MAX - 1`
/// and `u64::MAX - 2`.
pub fn run_experiment_with(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunRecord> {
    spec.validate()?;
    let model = spec.model()?;
    let truth = build_state(&spec.state, spec.n, derive_seed(spec.master_seed, TRUTH_STREAM))?;

    let (betas, tuning) = match spec.tuning {
        Tuning::Explicit { beta_y, beta_z } => ((beta_y, beta_z), None),
        Tuning::Auto { target, pilot_len, max_rounds } => {
            let tune_seed = derive_seed(spec.master_seed, TUNE_STREAM);
            let counts = simulate_counts(&truth, spec.m, derive_seed(tune_seed, DATA_SUBSTREAM))?;
            let p_hat = empirical_frequencies(&counts);
            let cfg = SamplerConfig::new(0.3, 0.2, 1, derive_seed(tune_seed, AMH_SUBSTREAM), model);
            let opts = TuneOptions { pilot_len, max_rounds, ..TuneOptions::new(target) };
            let res = tune_betas_with(&p_hat, &cfg, &opts)?;
            ((res.beta_y, res.beta_z), Some(res))
        }
    };
    // validates the step sizes once, before any chain starts
    SamplerConfig::new(betas.0, betas.1, spec.iterations, 0, model)
        .with_burn_in(spec.burn_in)
        .validate()?;

    let threads = opts.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let results: Vec<ChainResult> = pool.install(|| {
        (0..spec.chains)
            .into_par_iter()
            .map(|i| run_chain(spec, &truth, model, betas, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let chains: Vec<ChainRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    let baseline: Vec<ChainRow> = results.iter().map(|r| r.baseline.clone()).collect();
    let aggregates = RunRecord::compute_aggregates(&chains, &baseline, spec.sampler.methods());
    let timing = spec
        .sampler
        .methods()
        .iter()
        .map(|&method| {
            let rows: Vec<&ChainRow> = chains.iter().filter(|r| r.method == method).collect();
            let per10 = rows.iter().map(|r| r.wall_time * 10.0 / spec.iterations as f64).sum::<f64>() / rows.len() as f64;
            MethodTiming { method, seconds_per_10_steps: per10 }
        })
        .collect();

    let record = RunRecord {
        software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        spec: spec.clone(),
        resolved: ResolvedSettings {
            lambda: model.lambda,
            alpha: model.alpha,
            beta_y: betas.0,
            beta_z: betas.1,
            tuning,
            seed_rule: "chain i: c_i = splitmix64(master + (i + 1) * 0x9e3779b97f4a7c15); data = derive(c_i, 0), amh = derive(c_i, 1), rmh = derive(c_i, 2)".into(),
        },
        chains,
        linear_inversion: baseline,
        aggregates,
        timing,
    };

    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        io::save_matrix(&dir.join("truth.csv"), truth.matrix())?;
        for r in &results {
            let i = r.baseline.chain;
            io::save_counts(&dir.join(format!("counts_{i:03}.csv")), &r.counts)?;
            for (method, m) in &r.estimates {
                io::save_matrix(&dir.join(format!("rho_{}_{i:03}.csv", method.label())), m)?;
            }
        }
        io::save_json(&dir.join("manifest.json"), &record)?;
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            chains: 2,
            tuning: Tuning::Explicit { beta_y: 0.33, beta_z: 0.2 },
            ..ExperimentSpec::new(2).with_iterations(500)
        }
    }

    #[test]
    fn record_shape() {
        let rec = run_experiment_with(&small_spec(), &RunOptions { threads: Some(1), out_dir: None }).unwrap();
        assert_eq!(rec.chains.len(), 4);
        assert_eq!(rec.linear_inversion.len(), 2);
        assert!(rec.chains.iter().all(|r| r.mse >= 0.0 && r.maee >= 0.0));
        assert_eq!(rec.aggregates.len(), 3);
        assert_eq!(rec.resolved.lambda, 500.0);
        // paired data across samplers
        assert_eq!(rec.chains[0].data_seed, rec.chains[1].data_seed);
        assert_ne!(rec.chains[0].data_seed, rec.chains[2].data_seed);
    }

    #[test]
    fn record_json_round_trip_and_aggregate_check() {
        let rec = run_experiment_with(&small_spec(), &RunOptions { threads: Some(1), out_dir: None }).unwrap();
        let text = rec.to_json().unwrap();
        assert_eq!(RunRecord::from_json(&text).unwrap(), rec);
        let mut tampered = rec.clone();
        tampered.chains[0].mse += 1.0;
        assert!(RunRecord::from_json(&tampered.to_json().unwrap()).is_err());
    }

    #[test]
    fn shared_data_reuses_one_data_set() {
        let spec = ExperimentSpec { shared_data: true, ..small_spec() };
        let rec = run_experiment_with(&spec, &RunOptions { threads: Some(1), out_dir: None }).unwrap();
        assert_eq!(rec.chains[0].data_seed, rec.chains[2].data_seed);
    }

    #[test]
    fn mean_std_uses_sample_variance() {
        let (m, s) = mean_std([1.0, 2.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std([4.0].into_iter()), (4.0, 0.0));
    }
}
