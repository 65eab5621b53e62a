use num_complex::Complex64;

use crate::linalg::{self, CMatrix};
use crate::qcore::Dimensions;
use crate::rng::{fill_complex_normal, rng_from_seed};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_FLOOR: f64 = -1e-10;

/// A validated `d x d` density matrix: Hermitian, unit trace, PSD.
///
/// The stored matrix is exactly Hermitian; construction symmetrises inputs that
/// are Hermitian within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Dimensions,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates all three invariants (this runs an eigen-decomposition).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dims = Dimensions::from_hilbert_dim(matrix.nrows())?;
        let defect = linalg::hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (defect {defect:e})")));
        }
        let matrix = linalg::hermitian_part(&matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        let min_eig = linalg::hermitian_eigenvalues(&matrix, HERMITIAN_TOL)?
            .last()
            .copied()
            .unwrap_or(0.0);
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidDensity(format!(
                "not positive semi-definite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    /// For matrices that are valid by construction (convex combinations of
    /// normalised rank-one terms). Only Hermitian symmetry is enforced.
    pub(crate) fn from_trusted(dims: Dimensions, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.d);
        DensityMatrix {
            dims,
            matrix: linalg::hermitian_part(&matrix),
        }
    }

    /// Mixture `sum_i w_i v_i v_i^†` of unit vectors with weights summing to one.
    pub(crate) fn from_mixture(dims: Dimensions, weights: &[f64], vectors: &[Vec<Complex64>]) -> Self {
        let d = dims.d;
        let mut m = CMatrix::zeros(d, d);
        for (w, v) in weights.iter().zip(vectors) {
            for j in 0..d {
                let vj = v[j].conj() * *w;
                for i in 0..d {
                    m[(i, j)] += v[i] * vj;
                }
            }
        }
        Self::from_trusted(dims, m)
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigh(&self.matrix).0
    }

    pub fn maximally_mixed(dims: Dimensions) -> Self {
        let d = dims.d;
        let m = CMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
        DensityMatrix { dims, matrix: m }
    }

    /// Pure state `psi psi^† / |psi|^2`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let dims = Dimensions::from_hilbert_dim(psi.len())?;
        let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-150 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|x| x / norm).collect();
        Ok(Self::from_mixture(dims, &[1.0], &[v]))
    }
}

/// `rho = psi_1 psi_1^†/2 + psi_2 psi_2^†/2` where `psi_1` is uniform on the
/// first half of the basis and `psi_2` uniform on the second half.
pub fn true_state_rank2(n: usize) -> Result<DensityMatrix> {
    let dims = Dimensions::new(n)?;
    let d = dims.d;
    let amp = Complex64::new((2.0 / d as f64).sqrt(), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let psi1: Vec<Complex64> = (0..d).map(|i| if i < d / 2 { amp } else { zero }).collect();
    let psi2: Vec<Complex64> = (0..d).map(|i| if i >= d / 2 { amp } else { zero }).collect();
    Ok(DensityMatrix::from_mixture(dims, &[0.5, 0.5], &[psi1, psi2]))
}

/// `rho = (1/d) sum_i psi_i psi_i^†` with each `psi_i` a normalised standard
/// complex Gaussian draw.
pub fn true_state_mixed(n: usize, seed: u64) -> Result<DensityMatrix> {
    let dims = Dimensions::new(n)?;
    let d = dims.d;
    let mut rng = rng_from_seed(seed);
    let mut vectors = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        fill_complex_normal(&mut rng, &mut v);
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        vectors.push(v);
    }
    Ok(DensityMatrix::from_mixture(dims, &vec![1.0 / d as f64; d], &vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank2_state_n2_has_quarter_blocks() {
        let rho = true_state_rank2(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i < 2) == (j < 2) { 0.25 } else { 0.0 };
                assert!((rho.entry(i, j) - Complex64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rank2_state_spectrum() {
        for n in 1..=6 {
            let rho = true_state_rank2(n).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            let ev = rho.eigenvalues();
            assert!((ev[0] - 0.5).abs() < 1e-12 && (ev[1] - 0.5).abs() < 1e-12);
            assert!(ev[2..].iter().all(|v| v.abs() < 1e-12));
            DensityMatrix::new(rho.matrix().clone()).unwrap();
        }
    }

    #[test]
    fn mixed_state_is_full_rank_and_deterministic() {
        for n in 1..=4 {
            let rho = true_state_mixed(n, 11).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            assert_eq!(linalg::hermitian_defect(rho.matrix()), 0.0);
            assert!(*rho.eigenvalues().last().unwrap() > 0.0);
        }
        assert_eq!(true_state_mixed(2, 5).unwrap(), true_state_mixed(2, 5).unwrap());
        assert_ne!(true_state_mixed(2, 5).unwrap(), true_state_mixed(2, 6).unwrap());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let c = |v: f64| Complex64::new(v, 0.0);
        let not_unit = CMatrix::from_diagonal_element(2, 2, c(1.0));
        assert!(matches!(DensityMatrix::new(not_unit), Err(Error::InvalidDensity(_))));
        let not_psd = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(matches!(DensityMatrix::new(not_psd), Err(Error::InvalidDensity(_))));
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(matches!(DensityMatrix::new(not_herm), Err(Error::InvalidDensity(_))));
        let bad_dim = CMatrix::from_diagonal_element(3, 3, c(1.0 / 3.0));
        assert!(matches!(DensityMatrix::new(bad_dim), Err(Error::Dimension(_))));
    }
}
