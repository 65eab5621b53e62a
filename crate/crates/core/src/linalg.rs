//! Small dense helpers on complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^†) / 2`, exactly Hermitian.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    let mut out = m.clone();
    for i in 0..d {
        out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..d {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues(m: &CMatrix, tol: f64) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::dim(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let defect = hermitian_defect(m);
    if defect > tol {
        return Err(Error::InvalidDensity(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues descending with the
/// matching unit eigenvectors as columns.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_hermitian_eigenvalues_match_known_spectrum() {
        // sigma_y has eigenvalues +1 and -1
        let sy = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let ev = hermitian_eigenvalues(&sy, 1e-12).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(hermitian_eigenvalues(&m, 1e-12).is_err());
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.7, 0.0),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.1, -0.2),
                Complex64::new(0.3, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigh(&m);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            2,
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let back = &vecs * diag * vecs.adjoint();
        assert!(frobenius_sq(&(back - m)) < 1e-24);
    }
}
