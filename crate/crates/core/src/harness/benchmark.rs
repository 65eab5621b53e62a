use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::estimate::Method;
use crate::model::ModelConfig;
use crate::qcore::{empirical_frequencies, simulate_counts, true_state_rank2};
use crate::rng::derive_seed;
use crate::samplers::{AdaptiveChain, MhChain, NaiveChain, SamplerConfig};
use crate::{Error, Result};

/// One line of the timing table: `n,method,steps,seconds,evals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub method: Method,
    /// Iterations (adaptive) or sweeps (naive) timed.
    pub steps: usize,
    pub seconds: f64,
    /// Loss evaluations spent in the timed steps.
    pub evals: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchmarkOptions {
    pub m: u64,
    pub seed: u64,
    pub beta_y: f64,
    pub beta_z: f64,
    pub alpha: f64,
    /// `None` means `m / 2`.
    pub lambda: Option<f64>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions { m: 1000, seed: 0, beta_y: 0.03, beta_z: 0.02, alpha: 1.0, lambda: None }
    }
}

/// Times `steps` transitions of each sampler on data simulated from the
/// rank-2 reference state. One untimed warm-up step precedes each
/// measurement. Only the transitions are timed; estimate accumulation and
/// data simulation are excluded.
pub fn benchmark_runtime(n_list: &[usize], steps: usize, opts: &BenchmarkOptions) -> Result<Vec<TimingRow>> {
    if steps == 0 {
        return Err(Error::config("steps must be positive"));
    }
    let model = ModelConfig::exploratory(opts.alpha, opts.lambda.unwrap_or(opts.m as f64 / 2.0))?;
    let mut rows = Vec::new();
    for &n in n_list {
        let truth = true_state_rank2(n)?;
        let base = derive_seed(opts.seed, n as u64);
        let counts = simulate_counts(&truth, opts.m, derive_seed(base, 0))?;
        let p_hat = empirical_frequencies(&counts);
        let cfg = |s| SamplerConfig::new(opts.beta_y, opts.beta_z, steps, derive_seed(base, s), model);

        let mut amh = AdaptiveChain::new(&p_hat, &cfg(1))?;
        rows.push(time_chain(&mut amh, n, Method::Amh, steps)?);
        let mut rmh = NaiveChain::new(&p_hat, &cfg(2))?;
        rows.push(time_chain(&mut rmh, n, Method::Rmh, steps)?);
    }
    Ok(rows)
}

fn time_chain<C: MhChain>(chain: &mut C, n: usize, method: Method, steps: usize) -> Result<TimingRow> {
    chain.step()?;
    let evals_before = chain.evaluations();
    let started = Instant::now();
    for _ in 0..steps {
        chain.step()?;
    }
    let seconds = started.elapsed().as_secs_f64();
    Ok(TimingRow { n, method, steps, seconds, evals: chain.evaluations() - evals_before })
}

/// Naive-to-adaptive time ratio at `n`, if both rows are present.
pub fn speedup(rows: &[TimingRow], n: usize) -> Option<f64> {
    let per_step = |m: Method| {
        rows.iter()
            .find(|r| r.n == n && r.method == m)
            .map(|r| r.seconds / r.steps as f64)
    };
    Some(per_step(Method::Rmh)? / per_step(Method::Amh)?)
}

pub fn write_timing_csv<W: Write>(w: W, rows: &[TimingRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["n", "method", "steps", "seconds", "evals"])?;
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            r.method.label().to_string(),
            r.steps.to_string(),
            format!("{:e}", r.seconds),
            r.evals.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_timing_csv<R: Read>(r: R) -> Result<Vec<TimingRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["n", "method", "steps", "seconds", "evals"] {
        return Err(Error::parse("timing table header must be n,method,steps,seconds,evals"));
    }
    rdr.deserialize().map(|row| Ok(row?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_counts_per_step() {
        let rows = benchmark_runtime(&[2, 3], 10, &BenchmarkOptions::default()).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            let d = 1u64 << r.n;
            let per_step = match r.method {
                Method::Amh => 1,
                _ => 2 * d,
            };
            assert_eq!(r.evals, per_step * 10);
            assert!(r.seconds > 0.0);
        }
        assert!(speedup(&rows, 2).is_some());
        assert!(speedup(&rows, 5).is_none());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            TimingRow { n: 2, method: Method::Amh, steps: 10, seconds: 1.5e-5, evals: 10 },
            TimingRow { n: 2, method: Method::Rmh, steps: 10, seconds: 2.25e-4, evals: 80 },
        ];
        let mut buf = Vec::new();
        write_timing_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,method,steps,seconds,evals\n2,amh,10,"));
        assert_eq!(read_timing_csv(buf.as_slice()).unwrap(), rows);
    }
}
