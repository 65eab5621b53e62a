use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::{born_probabilities, DensityMatrix, Dimensions};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableKind {
    #[serde(rename = "exact-probabilities")]
    Exact,
    #[serde(rename = "empirical-frequencies")]
    Empirical,
}

/// `3^n x 2^n` table of outcome probabilities, one row per setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    dims: Dimensions,
    kind: TableKind,
    values: Vec<f64>,
}

const ENTRY_SLACK: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-10;

impl ProbTable {
    /// Validated constructor: entries in `[0, 1]` (with `1e-12` slack) and
    /// rows summing to one within `1e-10`.
    pub fn new(dims: Dimensions, kind: TableKind, values: Vec<f64>) -> Result<Self> {
        let table = Self::from_raw(dims, kind, values);
        table.check()?;
        Ok(table)
    }

    pub(crate) fn from_raw(dims: Dimensions, kind: TableKind, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dims.num_settings * dims.num_outcomes);
        ProbTable { dims, kind, values }
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != self.dims.num_settings * self.dims.num_outcomes {
            return Err(Error::dim("probability table has the wrong number of cells"));
        }
        for (a, row) in self.rows().enumerate() {
            if let Some(p) = row.iter().find(|p| !(-ENTRY_SLACK..=1.0 + ENTRY_SLACK).contains(*p)) {
                return Err(Error::parse(format!("row {a} has entry {p} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::parse(format!("row {a} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Uniform table, every entry `2^-n`.
    pub fn uniform(dims: Dimensions) -> Self {
        let p = 1.0 / dims.num_outcomes as f64;
        Self::from_raw(dims, TableKind::Exact, vec![p; dims.num_settings * dims.num_outcomes])
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, setting: usize, outcome: usize) -> f64 {
        self.values[setting * self.dims.num_outcomes + outcome]
    }

    pub fn row(&self, setting: usize) -> &[f64] {
        let w = self.dims.num_outcomes;
        &self.values[setting * w..(setting + 1) * w]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dims.num_outcomes)
    }
}

/// Raw measurement counts, `m` shots for each of the `3^n` settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    dims: Dimensions,
    shots_per_setting: u64,
    counts: Vec<u64>,
}

impl CountTable {
    pub fn new(dims: Dimensions, shots_per_setting: u64, counts: Vec<u64>) -> Result<Self> {
        if shots_per_setting == 0 {
            return Err(Error::config("shots per setting must be positive"));
        }
        if counts.len() != dims.num_settings * dims.num_outcomes {
            return Err(Error::dim(format!(
                "count table has {} cells, expected {}",
                counts.len(),
                dims.num_settings * dims.num_outcomes
            )));
        }
        for (a, row) in counts.chunks_exact(dims.num_outcomes).enumerate() {
            let total: u64 = row.iter().sum();
            if total != shots_per_setting {
                return Err(Error::parse(format!(
                    "setting {a} has {total} shots, expected {shots_per_setting}"
                )));
            }
        }
        Ok(CountTable {
            dims,
            shots_per_setting,
            counts,
        })
    }

    /// Builds a table whose rows all share the same total, inferring `m`.
    pub fn from_counts(dims: Dimensions, counts: Vec<u64>) -> Result<Self> {
        let m = counts.iter().take(dims.num_outcomes).sum();
        Self::new(dims, m, counts)
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn shots_per_setting(&self) -> u64 {
        self.shots_per_setting
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, setting: usize, outcome: usize) -> u64 {
        self.counts[setting * self.dims.num_outcomes + outcome]
    }

    pub fn row(&self, setting: usize) -> &[u64] {
        let w = self.dims.num_outcomes;
        &self.counts[setting * w..(setting + 1) * w]
    }
}

/// Draws `m` outcomes per setting from the Born distribution of `rho`
/// (inverse CDF on the cumulative row).
pub fn simulate_counts(rho: &DensityMatrix, m: u64, seed: u64) -> Result<CountTable> {
    if m == 0 {
        return Err(Error::config("shots per setting must be positive"));
    }
    let probs = born_probabilities(rho);
    let dims = probs.dims();
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0u64; dims.num_settings * dims.num_outcomes];
    let mut cdf = vec![0.0; dims.num_outcomes];
    for (row, out) in probs.rows().zip(counts.chunks_exact_mut(dims.num_outcomes)) {
        let mut acc = 0.0;
        let mut last_support = 0;
        for (s, (&p, c)) in row.iter().zip(cdf.iter_mut()).enumerate() {
            let p = p.max(0.0);
            if p > 0.0 {
                last_support = s;
            }
            acc += p;
            *c = acc;
        }
        for _ in 0..m {
            let u: f64 = rng.random::<f64>() * acc;
            let s = cdf.partition_point(|&c| c <= u).min(last_support);
            out[s] += 1;
        }
    }
    CountTable::new(dims, m, counts)
}

/// `p_hat = counts / m`.
pub fn empirical_frequencies(counts: &CountTable) -> ProbTable {
    let m = counts.shots_per_setting() as f64;
    let values = counts.counts().iter().map(|&c| c as f64 / m).collect();
    ProbTable::from_raw(counts.dims(), TableKind::Empirical, values)
}
