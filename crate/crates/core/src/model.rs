//! Spectral parameterisation of density matrices, the prior over it and the
//! pseudo-likelihood `exp(-lambda * loss)`.
//!
//! A state is `rho(x) = sum_i gamma_i z_i z_i^† / |z_i|^2` with
//! `gamma_i = y_i / sum_l y_l`. Under the prior the `y_i` are i.i.d.
//! `Gamma(alpha, 1)` (so `gamma ~ Dirichlet(alpha)`) and the `z_i` are i.i.d.
//! standard complex normal vectors.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::qcore::{DensityMatrix, Dimensions, FactoredState, LossWorkspace, ProbTable};
use crate::rng::{fill_complex_normal, rng_from_seed};
use crate::{Error, Result};

/// Squared norms below this are treated as a zero vector.
pub const MIN_VECTOR_NORM_SQ: f64 = 1e-300;

/// The parameter `x = {y_1..y_d; z_1..z_d}`.
///
/// `z` is stored vector-major: `z[i * d + k]` is coordinate `k` of `z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateParams {
    dims: Dimensions,
    y: Vec<f64>,
    z: Vec<Complex64>,
}

impl StateParams {
    pub fn new(d: usize, y: Vec<f64>, z: Vec<Complex64>) -> Result<Self> {
        let dims = Dimensions::from_hilbert_dim(d)?;
        if y.len() != d || z.len() != d * d {
            return Err(Error::dim(format!(
                "expected {d} weights and {d} vectors of length {d}, got {} weights and {} coordinates",
                y.len(),
                z.len()
            )));
        }
        if let Some((i, w)) = y.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::DegenerateParams(format!("weight y_{i} = {w} is not positive")));
        }
        for (i, v) in z.chunks_exact(d).enumerate() {
            let nsq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if !(nsq.is_finite() && nsq >= MIN_VECTOR_NORM_SQ) {
                return Err(Error::DegenerateParams(format!("vector z_{i} has squared norm {nsq:e}")));
            }
        }
        Ok(StateParams { dims, y, z })
    }

    pub fn dim(&self) -> usize {
        self.dims.d
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.y
    }

    pub fn vectors(&self) -> &[Complex64] {
        &self.z
    }

    pub fn vector(&self, i: usize) -> &[Complex64] {
        let d = self.dims.d;
        &self.z[i * d..(i + 1) * d]
    }

    /// Normalised weights `gamma_i = y_i / sum_l y_l`.
    pub fn gammas(&self) -> Vec<f64> {
        let total: f64 = self.y.iter().sum();
        self.y.iter().map(|w| w / total).collect()
    }

    /// The factor `A` with columns `sqrt(gamma_i) z_i / |z_i|`, so that
    /// `rho(x) = A A^†`.
    pub fn factored(&self) -> FactoredState {
        let d = self.dims.d;
        let gammas = self.gammas();
        let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
        for (i, (v, g)) in self.z.chunks_exact(d).zip(&gammas).enumerate() {
            let nsq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            let scale = (g / nsq).sqrt();
            for (k, c) in v.iter().enumerate() {
                amps[k * d + i] = c * scale;
            }
        }
        FactoredState::new(self.dims, d, amps).expect("factor shape matches")
    }

    pub(crate) fn with_weight(&self, i: usize, w: f64) -> Self {
        let mut out = self.clone();
        out.y[i] = w;
        out
    }

    pub(crate) fn with_vector(&self, i: usize, v: &[Complex64]) -> Self {
        let d = self.dims.d;
        let mut out = self.clone();
        out.z[i * d..(i + 1) * d].copy_from_slice(v);
        out
    }
}

/// `rho(x)`; Hermitian, PSD and unit trace by construction.
pub fn rho_from_params(x: &StateParams) -> DensityMatrix {
    x.factored().to_density_trusted()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Gamma shape of the weights, `0 < alpha <= 1` unless `exploratory`.
    pub alpha: f64,
    /// Inverse temperature of the pseudo-likelihood.
    pub lambda: f64,
    /// Set when `alpha > 1` was explicitly allowed.
    #[serde(default)]
    pub exploratory: bool,
}

impl ModelConfig {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config(format!(
                "alpha must be in (0, 1], got {alpha}; use ModelConfig::exploratory for larger values"
            )));
        }
        Self::check_lambda(lambda)?;
        Ok(ModelConfig { alpha, lambda, exploratory: false })
    }

    /// Accepts any `alpha > 0`. Values above one are outside the range with
    /// convergence guarantees and are flagged.
    pub fn exploratory(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be positive, got {alpha}")));
        }
        Self::check_lambda(lambda)?;
        let exploratory = alpha > 1.0;
        if exploratory {
            log::warn!("alpha = {alpha} > 1: outside the range covered by the estimator's guarantees");
        }
        Ok(ModelConfig { alpha, lambda, exploratory })
    }

    /// `lambda = m / 2`, `alpha = 1`.
    pub fn default_for_shots(m: u64) -> Self {
        ModelConfig { alpha: 1.0, lambda: m as f64 / 2.0, exploratory: false }
    }

    fn check_lambda(lambda: f64) -> Result<()> {
        // lambda = 0 is admitted: it turns the sampler into a prior sampler
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(())
    }
}

/// Draws `x` from the prior.
pub fn prior_sample_with<R: Rng + ?Sized>(d: usize, alpha: f64, rng: &mut R) -> Result<StateParams> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::config(e.to_string()))?;
    let mut y = Vec::with_capacity(d);
    while y.len() < d {
        // Gamma(alpha < 1) can underflow to exactly zero
        let w: f64 = gamma.sample(rng);
        if w > 0.0 {
            y.push(w);
        }
    }
    let mut z = vec![Complex64::new(0.0, 0.0); d * d];
    fill_complex_normal(rng, &mut z);
    StateParams::new(d, y, z)
}

pub fn prior_sample(d: usize, alpha: f64, seed: u64) -> Result<StateParams> {
    prior_sample_with(d, alpha, &mut rng_from_seed(seed))
}

/// Log prior density of the weights up to a constant:
/// `sum_i (alpha - 1) log y_i - y_i`.
pub fn log_prior_weights(y: &[f64], alpha: f64) -> f64 {
    y.iter().map(|&w| (alpha - 1.0) * w.ln() - w).sum()
}

/// `|| p_nu - p_hat ||_F^2`.
pub fn loss_prob(p_nu: &ProbTable, p_hat: &ProbTable) -> Result<f64> {
    if p_nu.dims() != p_hat.dims() {
        return Err(Error::dim(format!(
            "tables for n = {} and n = {}",
            p_nu.dims().n,
            p_hat.dims().n
        )));
    }
    Ok(p_nu
        .values()
        .iter()
        .zip(p_hat.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// `log L_D(x) = -lambda * loss(rho(x), p_hat)` through the factored path.
pub fn log_pseudo_likelihood(x: &StateParams, p_hat: &ProbTable, cfg: &ModelConfig) -> Result<f64> {
    log_pseudo_likelihood_in(x, p_hat, cfg, &mut LossWorkspace::new())
}

pub fn log_pseudo_likelihood_in(
    x: &StateParams,
    p_hat: &ProbTable,
    cfg: &ModelConfig,
    ws: &mut LossWorkspace,
) -> Result<f64> {
    Ok(-cfg.lambda * x.factored().loss(p_hat, ws)?)
}
