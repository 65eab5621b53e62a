//! Experiment orchestration: replicated runs against known states, runtime
//! benchmarks, and the files they produce.

mod benchmark;
mod experiment;
pub mod io;

pub use benchmark::{benchmark_runtime, speedup, write_timing_csv, read_timing_csv, BenchmarkOptions, TimingRow};
pub use experiment::{
    run_experiment, run_experiment_with, Aggregate, ChainRow, ExperimentSpec, MethodTiming, ResolvedSettings,
    RunOptions, RunRecord, SamplerChoice, StateSpec, Tuning,
};

use std::path::PathBuf;

use crate::qcore::{true_state_mixed, true_state_rank2, DensityMatrix};
use crate::Result;

/// Environment variable capping the number of chains run concurrently.
pub const THREADS_ENV: &str = "QTOMO_THREADS";

pub(crate) fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Builds the reference state named by a CLI/spec value.
pub fn build_state(state: &StateSpec, n: usize, seed: u64) -> Result<DensityMatrix> {
    match state {
        StateSpec::Rank2 => true_state_rank2(n),
        StateSpec::Mixed => true_state_mixed(n, seed),
        StateSpec::File(path) => {
            let rho = DensityMatrix::new(io::load_matrix(path)?)?;
            if rho.dims().n != n {
                return Err(crate::Error::dim(format!(
                    "{} holds an n = {} state, expected n = {n}",
                    path.display(),
                    rho.dims().n
                )));
            }
            Ok(rho)
        }
    }
}

impl std::str::FromStr for StateSpec {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rank2" => StateSpec::Rank2,
            "mixed" => StateSpec::Mixed,
            path => StateSpec::File(PathBuf::from(path)),
        })
    }
}
