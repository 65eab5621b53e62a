use serde::{Deserialize, Serialize};

use super::{AdaptiveChain, MhChain, SamplerConfig};
use crate::qcore::ProbTable;
use crate::{Error, Result};

const BETA_MIN: f64 = 1e-4;
const BETA_MAX: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub target: f64,
    pub pilot_len: usize,
    pub max_rounds: usize,
    /// Gain `c` of the update `beta <- beta * exp(c * (acc - target))`.
    pub gain: f64,
    pub tolerance: f64,
}

impl TuneOptions {
    pub fn new(target: f64) -> Self {
        TuneOptions { target, pilot_len: 500, max_rounds: 30, gain: 1.0, tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub beta_y: f64,
    pub beta_z: f64,
    /// Pilot acceptance rate achieved with the returned pair.
    pub acceptance: f64,
    pub rounds: usize,
    /// False when the round budget ran out; the pair is then the closest one
    /// seen.
    pub converged: bool,
    /// `(beta_y, beta_z, acceptance)` per pilot round; the discarded warm-up
    /// pilot is not included.
    pub history: Vec<(f64, f64, f64)>,
}

/// Pilot-based tuning of `(beta_y, beta_z)` toward a target acceptance rate,
/// with 30 rounds and unit gain.
pub fn tune_betas(p_hat: &ProbTable, cfg: &SamplerConfig, target: f64, pilot_len: usize) -> Result<TuneResult> {
    tune_betas_with(p_hat, cfg, &TuneOptions { pilot_len, ..TuneOptions::new(target) })
}

/// Runs successive pilot chains of the adaptive sampler, each continuing from
/// the previous pilot's final state, and rescales both step sizes by
/// `exp(gain * (acceptance - target))` until two consecutive pilots land
/// within `tolerance` of `target`. One extra pilot before the first round is
/// discarded so the chain leaves its prior draw before anything is measured.
/// The starting pair comes from `cfg`.
pub fn tune_betas_with(p_hat: &ProbTable, cfg: &SamplerConfig, opts: &TuneOptions) -> Result<TuneResult> {
    if !(opts.target > 0.0 && opts.target < 1.0) {
        return Err(Error::config(format!("target acceptance must be in (0, 1), got {}", opts.target)));
    }
    if opts.pilot_len == 0 || opts.max_rounds == 0 {
        return Err(Error::config("pilot length and round budget must be positive"));
    }
    cfg.validate()?;
    let mut chain = AdaptiveChain::new(p_hat, cfg)?;
    let (mut beta_y, mut beta_z) = (cfg.beta_y, cfg.beta_z);
    let mut history = Vec::with_capacity(opts.max_rounds);
    let mut best: Option<(f64, f64, f64)> = None;
    let pilot = |chain: &mut AdaptiveChain, beta_y, beta_z| -> Result<f64> {
        chain.set_betas(beta_y, beta_z);
        let mut accepted = 0;
        for _ in 0..opts.pilot_len {
            accepted += chain.step()?.accepted;
        }
        Ok(accepted as f64 / opts.pilot_len as f64)
    };
    pilot(&mut chain, beta_y, beta_z)?;
    let mut previous_hit = false;
    for round in 1..=opts.max_rounds {
        let acc = pilot(&mut chain, beta_y, beta_z)?;
        history.push((beta_y, beta_z, acc));
        if best.is_none_or(|(_, _, b)| (acc - opts.target).abs() < (b - opts.target).abs()) {
            best = Some((beta_y, beta_z, acc));
        }
        if (acc - opts.target).abs() <= opts.tolerance {
            if previous_hit {
                return Ok(TuneResult { beta_y, beta_z, acceptance: acc, rounds: round, converged: true, history });
            }
            previous_hit = true;
            continue;
        }
        previous_hit = false;
        let factor = (opts.gain * (acc - opts.target)).exp();
        beta_y = (beta_y * factor).clamp(BETA_MIN, BETA_MAX);
        beta_z = (beta_z * factor).clamp(BETA_MIN, BETA_MAX);
    }
    let (beta_y, beta_z, acceptance) = best.expect("at least one round");
    log::warn!(
        "acceptance tuning did not reach {} ± {} in {} rounds; best pilot rate {acceptance:.3}",
        opts.target,
        opts.tolerance,
        opts.max_rounds
    );
    Ok(TuneResult { beta_y, beta_z, acceptance, rounds: opts.max_rounds, converged: false, history })
}
