//! Pseudo-Bayesian quantum state tomography.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: Pauli settings and outcomes, density matrices, Born-rule
//!   probabilities and measurement simulation.
//! - [`model`]: the spectral prior parameterisation of a density matrix, the
//!   frequency-matching loss and the pseudo-likelihood built from it.
//! - [`samplers`]: the adaptive Metropolis-Hastings sampler (preconditioned
//!   Crank-Nicolson proposal on the vectors, multiplicative walk on the
//!   weights), the coordinate-wise naive baseline and acceptance-rate tuning.
//! - [`estimate`]: linear inversion and the MSE / MAEE error metrics.
//! - [`harness`]: replicated experiments, runtime benchmarks, CSV and JSON
//!   persistence. The `qtomo` binary is a thin CLI over this module.

pub mod error;
pub mod estimate;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod qcore;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
