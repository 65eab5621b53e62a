//! Pauli-measurement core: settings and outcomes, density matrices,
//! Born-rule probabilities and measurement data.
//!
//! Conventions used throughout the crate:
//!
//! - Qubit 1 is the outermost Kronecker factor, i.e. the most significant bit
//!   of a basis index. Basis state `|0>` is bit value 0.
//! - Settings are enumerated lexicographically in `X < Y < Z` with qubit 1 as
//!   the leading letter, so the setting index is the base-3 number
//!   `a_1 a_2 ... a_n`.
//! - Outcomes are enumerated lexicographically in `+1 < -1`, qubit 1 leading,
//!   so the outcome index is the binary number with bit 1 meaning `-1`.
//! - The single-qubit eigenbasis matrix `U_a` carries the `+1` eigenvector in
//!   its first column: `U_X = [[1, 1], [1, -1]]/sqrt2`,
//!   `U_Y = [[1, 1], [i, -i]]/sqrt2`, `U_Z = I`.

mod born;
mod density;
mod pauli;
mod tables;

pub use born::{born_probabilities, FactoredState, LossWorkspace};
pub use density::{true_state_mixed, true_state_rank2, DensityMatrix};
pub use pauli::{
    outcomes, pauli_factor_projector, setting_projector, settings, Axis, Dimensions, Outcome,
    Setting, Sign, MAX_QUBITS,
};
pub use tables::{empirical_frequencies, simulate_counts, CountTable, ProbTable, TableKind};
