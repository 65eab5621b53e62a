//! Metropolis-Hastings engines for the pseudo-posterior
//! `pi(x | D) ∝ exp(-lambda * loss(rho(x), D)) * prior(x)`.
//!
//! Two chains share one driver:
//!
//! - [`AdaptiveChain`] moves the whole state at once: a multiplicative walk on
//!   the weights and a preconditioned Crank-Nicolson step on the vectors. One
//!   loss evaluation per iteration.
//! - [`NaiveChain`] sweeps coordinate-wise: a multiplicative walk per weight,
//!   then an independence proposal (uniform on the unit sphere) per vector.
//!   `2d` loss evaluations per sweep.
//!
//! The estimate is the ergodic mean of `rho(x)` over post-burn-in iterations,
//! taken on the state after each accept/reject decision.

mod adaptive;
mod naive;
mod tune;

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::model::{rho_from_params, ModelConfig, StateParams};
use crate::qcore::{DensityMatrix, ProbTable};
use crate::{Error, Result};

pub use adaptive::{
    adaptive_log_accept_ratio, adaptive_propose, run_adaptive_mh, run_adaptive_mh_observed, AdaptiveChain, ProposalDraw,
};
pub use naive::{naive_propose_y, run_naive_mh, NaiveChain};
pub use tune::{tune_betas, tune_betas_with, TuneOptions, TuneResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Scale of the log-uniform weight step, in (0, 1).
    pub beta_y: f64,
    /// Crank-Nicolson step size, in (0, 1).
    pub beta_z: f64,
    /// Number of iterations (adaptive) or sweeps (naive), `T`.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub model: ModelConfig,
}

impl SamplerConfig {
    pub fn new(beta_y: f64, beta_z: f64, iterations: usize, seed: u64, model: ModelConfig) -> Self {
        SamplerConfig { beta_y, beta_z, iterations, burn_in: 0, seed, model }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_y > 0.0 && self.beta_y < 1.0) {
            return Err(Error::config(format!("beta_y must be in (0, 1), got {}", self.beta_y)));
        }
        if !(self.beta_z > 0.0 && self.beta_z < 1.0) {
            return Err(Error::config(format!("beta_z must be in (0, 1), got {}", self.beta_z)));
        }
        if self.iterations == 0 {
            return Err(Error::config("iteration count must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in {} must be smaller than the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

/// Proposals made and accepted in one iteration (adaptive) or sweep (naive).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub proposals: u64,
    pub accepted: u64,
}

/// A Markov chain over [`StateParams`] targeting the pseudo-posterior.
pub trait MhChain {
    /// One iteration of the chain.
    fn step(&mut self) -> Result<StepStats>;

    fn state(&self) -> &StateParams;

    /// `loss(rho(x), D)` of the current state.
    fn current_loss(&self) -> f64;

    /// Loss evaluations performed so far, including the initial one.
    fn evaluations(&self) -> u64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Mean of `rho(x)` over the kept iterations.
    pub rho_hat: DensityMatrix,
    /// Accepted / proposed moves over the kept iterations.
    pub acceptance_rate: f64,
    /// Accepted / proposed moves over the whole chain.
    pub full_chain_acceptance_rate: f64,
    /// Loss of the current state after every iteration.
    pub loss_trace: Vec<f64>,
    /// Seconds spent in the chain, initialisation included.
    pub wall_time: f64,
    pub final_state: StateParams,
    pub evaluations: u64,
    pub kept: usize,
}

/// Runs `chain` for `cfg.iterations` steps and averages `rho` after burn-in.
///
/// `observer` sees every post-decision state with its 1-based iteration index.
pub fn drive<C, F>(chain: &mut C, cfg: &SamplerConfig, started: Instant, mut observer: F) -> Result<ChainOutput>
where
    C: MhChain,
    F: FnMut(usize, &StateParams),
{
    cfg.validate()?;
    let d = chain.state().dim();
    let mut sum: CMatrix = DMatrix::zeros(d, d);
    let mut current_rho = rho_from_params(chain.state()).into_matrix();
    let mut loss_trace = Vec::with_capacity(cfg.iterations);
    let (mut kept_moves, mut kept_accepts) = (0u64, 0u64);
    let (mut all_moves, mut all_accepts) = (0u64, 0u64);
    for k in 1..=cfg.iterations {
        let stats = chain.step()?;
        all_moves += stats.proposals;
        all_accepts += stats.accepted;
        if stats.accepted > 0 {
            current_rho = rho_from_params(chain.state()).into_matrix();
        }
        if k > cfg.burn_in {
            kept_moves += stats.proposals;
            kept_accepts += stats.accepted;
            sum += &current_rho;
        }
        loss_trace.push(chain.current_loss());
        observer(k, chain.state());
    }
    let kept = cfg.iterations - cfg.burn_in;
    sum /= Complex64::new(kept as f64, 0.0);
    let dims = chain.state().dims();
    Ok(ChainOutput {
        rho_hat: DensityMatrix::from_trusted(dims, sum),
        acceptance_rate: ratio(kept_accepts, kept_moves),
        full_chain_acceptance_rate: ratio(all_accepts, all_moves),
        loss_trace,
        wall_time: started.elapsed().as_secs_f64(),
        final_state: chain.state().clone(),
        evaluations: chain.evaluations(),
        kept,
    })
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub(crate) fn check_table(p_hat: &ProbTable, state: &StateParams) -> Result<()> {
    if p_hat.dims() != state.dims() {
        return Err(Error::dim(format!(
            "data are for d = {}, chain state has d = {}",
            p_hat.dims().d,
            state.dim()
        )));
    }
    Ok(())
}

/// Metropolis decision on a log acceptance ratio; NaN rejects.
pub(crate) fn accept<R: rand::Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    crate::rng::open_unit(rng).ln() < log_ratio
}
