//! Linear inversion and error metrics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix};
use crate::qcore::{DensityMatrix, ProbTable};
use crate::{Error, Result};

/// Hermitian tolerance for metric inputs.
const METRIC_HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "amh")]
    Amh,
    #[serde(rename = "rmh")]
    Rmh,
    #[serde(rename = "linear-inversion")]
    LinearInversion,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Amh => "amh",
            Method::Rmh => "rmh",
            Method::LinearInversion => "linear-inversion",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// An estimate scored against a known truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// May be non-PSD for linear inversion.
    pub rho_hat: CMatrix,
    pub mse: f64,
    pub maee: f64,
    pub method: Method,
}

impl EstimateReport {
    pub fn score(method: Method, rho_hat: CMatrix, truth: &DensityMatrix) -> Result<Self> {
        let mse = mse(&rho_hat, truth.matrix())?;
        let maee = maee(&rho_hat, truth.matrix())?;
        Ok(EstimateReport { rho_hat, mse, maee, method })
    }
}

fn same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::dim(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `||a - b||_F^2 / d^2`.
pub fn mse(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    same_shape(a, b)?;
    let d = a.nrows() as f64;
    Ok(linalg::frobenius_sq(&(a - b)) / (d * d))
}

/// Mean absolute difference of the eigenvalues, both spectra sorted
/// descending.
pub fn maee(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    same_shape(a, b)?;
    let ea = linalg::hermitian_eigenvalues(a, METRIC_HERMITIAN_TOL)?;
    let eb = linalg::hermitian_eigenvalues(b, METRIC_HERMITIAN_TOL)?;
    Ok(ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).sum::<f64>() / ea.len() as f64)
}

/// Pauli-expansion inversion `rho = 2^-n sum_b e_b sigma_b`.
///
/// For a Pauli string `b` over `{I, X, Y, Z}` the expectation `e_b` is the
/// empirical mean of `prod_{j: b_j != I} s_j`, averaged over every setting
/// that agrees with `b` on its non-identity qubits. The result is exactly
/// Hermitian with unit trace but need not be positive semi-definite.
pub fn linear_inversion(p_hat: &ProbTable) -> CMatrix {
    let dims = p_hat.dims();
    let (n, d) = (dims.n, dims.d);
    // Pauli strings are indexed in base 4 with digit 0 = I and 1..=3 = X, Y, Z,
    // qubit 1 most significant.
    let num_strings = 4usize.pow(n as u32);
    let mut sums = vec![0.0; num_strings];
    let mut parity = vec![0.0; d];
    let pow4: Vec<usize> = (0..n).map(|q| 4usize.pow((n - 1 - q) as u32)).collect();
    let pow3: Vec<usize> = (0..n).map(|q| 3usize.pow((n - 1 - q) as u32)).collect();
    for (a, row) in p_hat.rows().enumerate() {
        // parity[mask] = sum_s p(s) (-1)^{popcount(s & mask)}, a Walsh-Hadamard transform
        parity.copy_from_slice(row);
        let mut h = 1;
        while h < d {
            for base in (0..d).step_by(2 * h) {
                for i in base..base + h {
                    let (u, v) = (parity[i], parity[i + h]);
                    parity[i] = u + v;
                    parity[i + h] = u - v;
                }
            }
            h *= 2;
        }
        for (mask, &e) in parity.iter().enumerate() {
            let mut string = 0;
            for q in 0..n {
                if mask >> (n - 1 - q) & 1 == 1 {
                    string += (a / pow3[q] % 3 + 1) * pow4[q];
                }
            }
            sums[string] += e;
        }
    }
    let mut rho = CMatrix::zeros(d, d);
    let norm = 1.0 / d as f64;
    for (string, &sum) in sums.iter().enumerate() {
        let identities = (0..n).filter(|&q| string / pow4[q] % 4 == 0).count();
        // each string is compatible with 3^(#I) settings
        let e = sum / 3usize.pow(identities as u32) as f64;
        if e == 0.0 {
            continue;
        }
        add_pauli_string(&mut rho, string, n, &pow4, Complex64::new(e * norm, 0.0));
    }
    linalg::hermitian_part(&rho)
}

/// `rho += coeff * sigma_string`. A Pauli string is a monomial matrix: row `r`
/// has its single entry in column `r ^ flip`.
fn add_pauli_string(rho: &mut CMatrix, string: usize, n: usize, pow4: &[usize], coeff: Complex64) {
    let d = rho.nrows();
    let mut flip = 0;
    for q in 0..n {
        let digit = string / pow4[q] % 4;
        if digit == 1 || digit == 2 {
            flip |= 1 << (n - 1 - q);
        }
    }
    for r in 0..d {
        let mut v = coeff;
        for q in 0..n {
            let bit = r >> (n - 1 - q) & 1;
            match string / pow4[q] % 4 {
                2 => v *= if bit == 0 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                3 if bit == 1 => v = -v,
                _ => {}
            }
        }
        rho[(r, r ^ flip)] += v;
    }
}

/// Projects a Hermitian unit-trace matrix onto physical states by clipping
/// negative eigenvalues and renormalising.
pub fn project_to_density(m: &CMatrix) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::dim("matrix is not square"));
    }
    if linalg::hermitian_defect(m) > METRIC_HERMITIAN_TOL {
        return Err(Error::InvalidDensity("matrix is not Hermitian".into()));
    }
    let (vals, vecs) = linalg::hermitian_eigh(m);
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDensity("no positive spectrum to keep".into()));
    }
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (k, &w) in clipped.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let col = vecs.column(k);
        out += col * col.adjoint() * Complex64::new(w / total, 0.0);
    }
    DensityMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{born_probabilities, true_state_mixed, true_state_rank2, Dimensions};

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn mse_examples() {
        let a = true_state_mixed(2, 1).unwrap().into_matrix();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let x = diag(&[0.6, 0.4]);
        let y = diag(&[0.5, 0.5]);
        assert!((mse(&x, &y).unwrap() - 0.005).abs() < 1e-15);
        assert!(mse(&x, &a).is_err());
    }

    #[test]
    fn mse_is_unitarily_invariant() {
        let a = true_state_mixed(2, 1).unwrap().into_matrix();
        let b = true_state_mixed(2, 2).unwrap().into_matrix();
        let (_, u) = linalg::hermitian_eigh(&true_state_mixed(2, 3).unwrap().into_matrix());
        let ua = &u * &a * u.adjoint();
        let ub = &u * &b * u.adjoint();
        assert!((mse(&a, &b).unwrap() - mse(&ua, &ub).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn maee_examples() {
        assert!((maee(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap() - 0.5).abs() < 1e-15);
        let rank2 = true_state_rank2(2).unwrap().into_matrix();
        let mixed = diag(&[0.25; 4]);
        assert!((maee(&rank2, &mixed).unwrap() - 0.25).abs() < 1e-12);
        assert!(maee(&rank2, &rank2).unwrap() < 1e-12);
        let mut skew = diag(&[0.5, 0.5]);
        skew[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(matches!(maee(&skew, &diag(&[0.5, 0.5])), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn inversion_of_population_probabilities_is_exact() {
        for n in 1..=3 {
            for seed in 0..3 {
                let rho = true_state_mixed(n, seed).unwrap();
                let back = linear_inversion(&born_probabilities(&rho));
                let diff = &back - rho.matrix();
                assert!(diff.iter().all(|v| v.norm() < 1e-10), "n = {n}");
            }
            let rho = true_state_rank2(n).unwrap();
            let back = linear_inversion(&born_probabilities(&rho));
            assert!((&back - rho.matrix()).iter().all(|v| v.norm() < 1e-10));
        }
    }

    #[test]
    fn inversion_of_uniform_table_is_maximally_mixed() {
        let dims = Dimensions::new(3).unwrap();
        let back = linear_inversion(&ProbTable::uniform(dims));
        let expect = diag(&[0.125; 8]);
        assert!((&back - expect).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn projection_clips_negative_spectrum() {
        let m = diag(&[1.2, -0.2]);
        let rho = project_to_density(&m).unwrap();
        assert!((rho.entry(0, 0).re - 1.0).abs() < 1e-12);
        assert!(rho.entry(1, 1).norm() < 1e-12);
    }
}
