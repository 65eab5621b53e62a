//! Born-rule probabilities for every Pauli setting.
//!
//! For a setting `a` the outcome distribution is the diagonal of
//! `U_a^† rho U_a` with `U_a = U_{a_1} ⊗ ... ⊗ U_{a_n}`. The rotation is never
//! built as a `d x d` matrix: each factor acts on one qubit as a 2x2 butterfly
//! over basis-index pairs. Settings are visited depth-first over qubits so a
//! rotated prefix is shared by the three settings that extend it, and Z
//! factors (identity rotations) cost nothing.

use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::qcore::{Axis, DensityMatrix, Dimensions, ProbTable, TableKind};
use crate::{Error, Result};

type Butterfly = [[Complex64; 2]; 2];

/// `dst = (u ⊗ on qubit) src` acting on the row (basis) index of a
/// basis-major `d x width` buffer.
fn rotate_rows(u: &Butterfly, stride: usize, width: usize, src: &[Complex64], dst: &mut [Complex64]) {
    let d = src.len() / width;
    let [[u00, u01], [u10, u11]] = *u;
    for base in (0..d).step_by(2 * stride) {
        for b in base..base + stride {
            let (r0, r1) = (b * width, (b + stride) * width);
            for i in 0..width {
                let v0 = src[r0 + i];
                let v1 = src[r1 + i];
                dst[r0 + i] = u00 * v0 + u01 * v1;
                dst[r1 + i] = u10 * v0 + u11 * v1;
            }
        }
    }
}

/// In-place right multiplication by `u^†` on the column index of a row-major
/// `d x d` buffer.
fn rotate_cols_adjoint(u: &Butterfly, stride: usize, d: usize, buf: &mut [Complex64]) {
    let [[u00, u01], [u10, u11]] = *u;
    let (c00, c01, c10, c11) = (u00.conj(), u01.conj(), u10.conj(), u11.conj());
    for row in buf.chunks_exact_mut(d) {
        for base in (0..d).step_by(2 * stride) {
            for c in base..base + stride {
                let v0 = row[c];
                let v1 = row[c + stride];
                row[c] = c00 * v0 + c01 * v1;
                row[c + stride] = c10 * v0 + c11 * v1;
            }
        }
    }
}

struct Traversal {
    n: usize,
    width: usize,
    /// Also rotate columns (dense `rho` rather than a factor `A` of `A A^†`).
    two_sided: bool,
}

impl Traversal {
    fn visit<F>(&self, depth: usize, setting: usize, src: &[Complex64], scratch: &mut [Vec<Complex64>], leaf: &mut F)
    where
        F: FnMut(usize, &[Complex64]),
    {
        if depth == self.n {
            leaf(setting, src);
            return;
        }
        let (head, tail) = scratch
            .split_first_mut()
            .expect("one scratch buffer per qubit");
        let stride = 1 << (self.n - 1 - depth);
        for axis in Axis::ALL {
            let next = setting * 3 + axis.index();
            match axis.basis_change_adjoint() {
                None => self.visit(depth + 1, next, src, tail, leaf),
                Some(u) => {
                    rotate_rows(&u, stride, self.width, src, head);
                    if self.two_sided {
                        rotate_cols_adjoint(&u, stride, self.width, head);
                    }
                    self.visit(depth + 1, next, head, tail, leaf);
                }
            }
        }
    }
}

fn scratch_buffers(n: usize, len: usize) -> Vec<Vec<Complex64>> {
    (0..n).map(|_| vec![Complex64::new(0.0, 0.0); len]).collect()
}

/// Table of `p_{a,s} = Tr(rho P^a_s)` over all settings and outcomes.
///
/// Cost is `O(d^2)` per rotated node of the setting tree, about
/// `1.5 * 3^n * d^2` overall.
pub fn born_probabilities(rho: &DensityMatrix) -> ProbTable {
    let dims = rho.dims();
    let d = dims.d;
    let m = rho.matrix();
    let mut src = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            src[i * d + j] = m[(i, j)];
        }
    }
    let mut values = vec![0.0; dims.num_settings * d];
    let mut scratch = scratch_buffers(dims.n, d * d);
    let walk = Traversal {
        n: dims.n,
        width: d,
        two_sided: true,
    };
    walk.visit(0, 0, &src, &mut scratch, &mut |a, rotated| {
        let row = &mut values[a * d..(a + 1) * d];
        for (s, p) in row.iter_mut().enumerate() {
            *p = rotated[s * d + s].re;
        }
    });
    ProbTable::from_raw(dims, TableKind::Exact, values)
}

/// Reusable scratch for repeated loss evaluations at fixed `(n, rank)`.
#[derive(Debug, Clone, Default)]
pub struct LossWorkspace {
    buffers: Vec<Vec<Complex64>>,
}

impl LossWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, n: usize, len: usize) -> &mut [Vec<Complex64>] {
        if self.buffers.len() != n || self.buffers.first().map_or(0, Vec::len) != len {
            self.buffers = scratch_buffers(n, len);
        }
        &mut self.buffers
    }
}

/// A state in factored form `rho = A A^†` with `A` a `d x r` matrix stored
/// basis-major (`amps[b * r + i]` is component `b` of column `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredState {
    dims: Dimensions,
    rank: usize,
    amps: Vec<Complex64>,
}

impl FactoredState {
    pub fn new(dims: Dimensions, rank: usize, amps: Vec<Complex64>) -> Result<Self> {
        if rank == 0 || amps.len() != dims.d * rank {
            return Err(Error::dim(format!(
                "factor has {} amplitudes, expected {} x {rank}",
                amps.len(),
                dims.d
            )));
        }
        Ok(FactoredState { dims, rank, amps })
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `Tr(A A^†)`.
    pub fn trace(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// The dense matrix `A A^†`. Valid as a density matrix whenever the trace
    /// is one, which holds for factors built from state parameters.
    pub fn to_matrix(&self) -> CMatrix {
        let (d, r) = (self.dims.d, self.rank);
        let mut m = CMatrix::zeros(d, d);
        for j in 0..d {
            let col_j = &self.amps[j * r..(j + 1) * r];
            for i in j..d {
                let col_i = &self.amps[i * r..(i + 1) * r];
                let v: Complex64 = col_i.iter().zip(col_j).map(|(a, b)| a * b.conj()).sum();
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    pub(crate) fn to_density_trusted(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.dims, self.to_matrix())
    }

    fn walk<F: FnMut(usize, &[Complex64])>(&self, ws: &mut LossWorkspace, leaf: &mut F) {
        let scratch = ws.prepare(self.dims.n, self.amps.len());
        let walk = Traversal {
            n: self.dims.n,
            width: self.rank,
            two_sided: false,
        };
        walk.visit(0, 0, &self.amps, scratch, leaf);
    }

    /// Born probabilities from the factor, `O(n d r)` per setting.
    pub fn born_probabilities(&self) -> ProbTable {
        let (d, r) = (self.dims.d, self.rank);
        let mut values = vec![0.0; self.dims.num_settings * d];
        self.walk(&mut LossWorkspace::new(), &mut |a, rotated| {
            for (s, p) in values[a * d..(a + 1) * d].iter_mut().enumerate() {
                *p = rotated[s * r..(s + 1) * r].iter().map(|v| v.norm_sqr()).sum();
            }
        });
        ProbTable::from_raw(self.dims, TableKind::Exact, values)
    }

    /// `sum_{a,s} (p_{a,s} - target_{a,s})^2` without materialising the
    /// probability table.
    pub fn loss(&self, target: &ProbTable, ws: &mut LossWorkspace) -> Result<f64> {
        if target.dims() != self.dims {
            return Err(Error::dim(format!(
                "table is for n = {}, state has n = {}",
                target.dims().n,
                self.dims.n
            )));
        }
        let (d, r) = (self.dims.d, self.rank);
        let t = target.values();
        let mut total = 0.0;
        self.walk(ws, &mut |a, rotated| {
            let row = &t[a * d..(a + 1) * d];
            for (s, &q) in row.iter().enumerate() {
                let p: f64 = rotated[s * r..(s + 1) * r].iter().map(|v| v.norm_sqr()).sum();
                let diff = p - q;
                total += diff * diff;
            }
        });
        Ok(total)
    }
}
