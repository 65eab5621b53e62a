use std::time::Instant;

use num_complex::Complex64;

use super::{accept, check_table, drive, ChainOutput, MhChain, SamplerConfig, StepStats};
use crate::model::{prior_sample_with, ModelConfig, StateParams};
use crate::qcore::{LossWorkspace, ProbTable};
use crate::rng::{centered_uniform, fill_complex_normal, rng_from_seed, QRng};
use crate::Result;

/// `y * exp(u)` with `u ~ U(-1/2, 1/2)` supplied by the caller.
pub fn naive_propose_y(y: f64, u: f64) -> f64 {
    y * u.exp()
}

/// Coordinate-wise baseline chain: per sweep, `d` weight updates followed by
/// `d` vector updates, each with its own loss evaluation.
pub struct NaiveChain<'a> {
    p_hat: &'a ProbTable,
    model: ModelConfig,
    state: StateParams,
    loss: f64,
    evaluations: u64,
    rng: QRng,
    ws: LossWorkspace,
}

impl<'a> NaiveChain<'a> {
    /// Starts from a prior draw with each vector projected to the unit sphere.
    pub fn new(p_hat: &'a ProbTable, cfg: &SamplerConfig) -> Result<Self> {
        let mut rng = rng_from_seed(cfg.seed);
        let d = p_hat.dims().d;
        let draw = prior_sample_with(d, cfg.model.alpha, &mut rng)?;
        let mut z = draw.vectors().to_vec();
        z.chunks_exact_mut(d).for_each(normalize);
        let state = StateParams::new(d, draw.weights().to_vec(), z)?;
        Self::from_state(p_hat, cfg, state, rng)
    }

    pub fn from_state(p_hat: &'a ProbTable, cfg: &SamplerConfig, state: StateParams, rng: QRng) -> Result<Self> {
        check_table(p_hat, &state)?;
        let mut ws = LossWorkspace::new();
        let loss = state.factored().loss(p_hat, &mut ws)?;
        Ok(NaiveChain { p_hat, model: cfg.model, state, loss, evaluations: 1, rng, ws })
    }

    fn evaluate(&mut self, x: &StateParams) -> Result<f64> {
        self.evaluations += 1;
        x.factored().loss(self.p_hat, &mut self.ws)
    }
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
}

impl MhChain for NaiveChain<'_> {
    fn step(&mut self) -> Result<StepStats> {
        let d = self.state.dim();
        let (alpha, lambda) = (self.model.alpha, self.model.lambda);
        let mut accepted = 0;
        for i in 0..d {
            let old = self.state.weights()[i];
            let new = naive_propose_y(old, centered_uniform(&mut self.rng));
            let candidate = self.state.with_weight(i, new);
            let new_loss = self.evaluate(&candidate)?;
            let log_ratio = -lambda * (new_loss - self.loss) + alpha * new.ln() - new - alpha * old.ln() + old;
            if accept(log_ratio, &mut self.rng) {
                self.state = candidate;
                self.loss = new_loss;
                accepted += 1;
            }
        }
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        for i in 0..d {
            fill_complex_normal(&mut self.rng, &mut v);
            normalize(&mut v);
            let candidate = self.state.with_vector(i, &v);
            let new_loss = self.evaluate(&candidate)?;
            if accept(-lambda * (new_loss - self.loss), &mut self.rng) {
                self.state = candidate;
                self.loss = new_loss;
                accepted += 1;
            }
        }
        Ok(StepStats { proposals: 2 * d as u64, accepted })
    }

    fn state(&self) -> &StateParams {
        &self.state
    }

    fn current_loss(&self) -> f64 {
        self.loss
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Naive coordinate-wise MH estimate; `cfg.iterations` counts sweeps. The
/// step sizes in `cfg` are not used.
pub fn run_naive_mh(p_hat: &ProbTable, cfg: &SamplerConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let mut chain = NaiveChain::new(p_hat, cfg)?;
    drive(&mut chain, cfg, started, |_, _| {})
}
