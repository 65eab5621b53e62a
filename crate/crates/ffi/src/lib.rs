//! C ABI over `qtomo`.
//!
//! Objects cross the boundary as opaque handles (`QtMatrix`, `QtCounts`)
//! created by `qt_*` constructors and released with the matching `*_free`.
//! Every fallible call returns a [`QtStatus`]; on failure a message is kept
//! per thread and can be read with [`qt_last_error`]. Matrices are exchanged
//! as separate row-major real and imaginary buffers of length `d * d`.
//! Panics never unwind into the caller; they surface as `QT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use qtomo::estimate::{linear_inversion, maee, mse};
use qtomo::harness::io;
use qtomo::linalg::CMatrix;
use qtomo::model::ModelConfig;
use qtomo::qcore::{empirical_frequencies, simulate_counts, true_state_mixed, true_state_rank2, CountTable, DensityMatrix, Dimensions};
use qtomo::samplers::{run_adaptive_mh, run_naive_mh, ChainOutput, SamplerConfig};
use qtomo::{Error, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    InvalidDensity = 4,
    Degenerate = 5,
    Io = 6,
    Parse = 7,
    Panic = 8,
}

/// Dense complex matrix (a density matrix or an estimate).
pub struct QtMatrix {
    inner: CMatrix,
}

/// Measurement counts for all settings and outcomes.
pub struct QtCounts {
    inner: CountTable,
}

/// Sampler settings. A negative `lambda` selects the default `m / 2`; a zero
/// `burn_in` is used as given.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QtSamplerConfig {
    pub beta_y: f64,
    pub beta_z: f64,
    pub iterations: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub alpha: f64,
    pub lambda: f64,
}

/// Diagnostics of one sampler run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QtRunInfo {
    pub acceptance_rate: f64,
    pub evaluations: u64,
    pub wall_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(QtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension(_) => QtStatus::Dimension,
            Error::InvalidDensity(_) => QtStatus::InvalidDensity,
            Error::DegenerateParams(_) => QtStatus::Degenerate,
            Error::InvalidConfig(_) => QtStatus::InvalidArgument,
            Error::Io(_) => QtStatus::Io,
            Error::Parse(_) | Error::Csv(_) | Error::Json(_) => QtStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QtStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> QtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            QtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            QtStatus::Panic
        }
    }
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(QtStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn boxed_matrix(inner: CMatrix) -> *mut QtMatrix {
    Box::into_raw(Box::new(QtMatrix { inner }))
}

/// Message describing the last failure on this thread; empty after a
/// successful call. Valid until the next `qt_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fills `cfg` with defaults: beta (0.03, 0.02), 30000 iterations, 3000
/// burn-in, seed 0, alpha 1, lambda = m / 2.
///
/// # Safety
/// `cfg` must be null or point to writable memory for one `QtSamplerConfig`.
#[no_mangle]
pub unsafe extern "C" fn qt_sampler_config_default(cfg: *mut QtSamplerConfig) -> QtStatus {
    guard(|| {
        *out_ptr(cfg, "cfg")? = QtSamplerConfig {
            beta_y: 0.03,
            beta_z: 0.02,
            iterations: 30_000,
            burn_in: 3_000,
            seed: 0,
            alpha: 1.0,
            lambda: -1.0,
        };
        Ok(())
    })
}

/// Rank-2 reference state on `n` qubits.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_true_state_rank2(n: usize, out: *mut *mut QtMatrix) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed_matrix(true_state_rank2(n)?.into_matrix());
        Ok(())
    })
}

/// Full-rank reference state: equal mixture of `2^n` random pure states
/// drawn from `seed`.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qt_true_state_mixed(n: usize, seed: u64, out: *mut *mut QtMatrix) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed_matrix(true_state_mixed(n, seed)?.into_matrix());
        Ok(())
    })
}

/// Copies a `d x d` matrix from row-major buffers. `d` must be a power of two
/// between 2 and 256. The matrix is not checked for being a valid state;
/// functions that need one check it themselves.
///
/// # Safety
/// `re` and `im` must each point to `d * d` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qt_matrix_from_parts(d: usize, re: *const f64, im: *const f64, out: *mut *mut QtMatrix) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if re.is_null() || im.is_null() {
            return Err(null("matrix buffer"));
        }
        Dimensions::from_hilbert_dim(d)?;
        let re = std::slice::from_raw_parts(re, d * d);
        let im = std::slice::from_raw_parts(im, d * d);
        let m = CMatrix::from_fn(d, d, |i, j| C64::new(re[i * d + j], im[i * d + j]));
        *out = boxed_matrix(m);
        Ok(())
    })
}

/// Side length of the matrix, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_matrix_dim(m: *const QtMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.nrows())
}

/// Copies the matrix into row-major buffers of length `len >= d * d`.
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qt_matrix_copy(m: *const QtMatrix, re: *mut f64, im: *mut f64, len: usize) -> QtStatus {
    guard(|| {
        let m = &in_ref(m, "matrix")?.inner;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let d = m.nrows();
        if len < d * d {
            return Err(Failure(QtStatus::InvalidArgument, format!("buffer holds {len} values, need {}", d * d)));
        }
        let re = std::slice::from_raw_parts_mut(re, d * d);
        let im = std::slice::from_raw_parts_mut(im, d * d);
        for i in 0..d {
            for j in 0..d {
                re[i * d + j] = m[(i, j)].re;
                im[i * d + j] = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Writes the matrix as `row,col,re,im` CSV.
///
/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qt_matrix_save(m: *const QtMatrix, path: *const c_char) -> QtStatus {
    guard(|| {
        let m = in_ref(m, "matrix")?;
        io::save_matrix(&path_arg(path)?, &m.inner)?;
        Ok(())
    })
}

/// Reads a `row,col,re,im` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_matrix_load(path: *const c_char, out: *mut *mut QtMatrix) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed_matrix(io::load_matrix(&path_arg(path)?)?);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_matrix_free(m: *mut QtMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Simulates `m` shots per setting from the state `rho`.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_simulate_counts(rho: *const QtMatrix, m: u64, seed: u64, out: *mut *mut QtCounts) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let rho = DensityMatrix::new(in_ref(rho, "rho")?.inner.clone())?;
        *out = Box::into_raw(Box::new(QtCounts { inner: simulate_counts(&rho, m, seed)? }));
        Ok(())
    })
}

/// Builds a count table for `n` qubits from `len = 3^n * 2^n` counts ordered
/// setting-major (settings and outcomes in lexicographic order, first qubit
/// most significant). Every setting must have the same total.
///
/// # Safety
/// `counts` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_from_buffer(n: usize, counts: *const u64, len: usize, out: *mut *mut QtCounts) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let dims = Dimensions::new(n)?;
        if len != dims.num_settings * dims.num_outcomes {
            return Err(Failure(
                QtStatus::Dimension,
                format!("n = {n} needs {} counts, got {len}", dims.num_settings * dims.num_outcomes),
            ));
        }
        let values = std::slice::from_raw_parts(counts, len).to_vec();
        *out = Box::into_raw(Box::new(QtCounts { inner: CountTable::from_counts(dims, values)? }));
        Ok(())
    })
}

/// Reads a `setting,outcome,count` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_load(path: *const c_char, out: *mut *mut QtCounts) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(QtCounts { inner: io::load_counts(&path_arg(path)?)? }));
        Ok(())
    })
}

/// Writes a `setting,outcome,count` CSV.
///
/// # Safety
/// `c` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_save(c: *const QtCounts, path: *const c_char) -> QtStatus {
    guard(|| {
        let c = in_ref(c, "counts")?;
        io::save_counts(&path_arg(path)?, &c.inner)?;
        Ok(())
    })
}

/// Number of qubits, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_num_qubits(c: *const QtCounts) -> usize {
    c.as_ref().map_or(0, |c| c.inner.dims().n)
}

/// Number of cells, `3^n * 2^n`, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_len(c: *const QtCounts) -> usize {
    c.as_ref().map_or(0, |c| c.inner.counts().len())
}

/// Shots per setting, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_shots(c: *const QtCounts) -> u64 {
    c.as_ref().map_or(0, |c| c.inner.shots_per_setting())
}

/// Copies the counts (setting-major) into `out`, which holds `len` values.
///
/// # Safety
/// `c` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_copy(c: *const QtCounts, out: *mut u64, len: usize) -> QtStatus {
    guard(|| {
        let values = in_ref(c, "counts")?.inner.counts();
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if len < values.len() {
            return Err(Failure(QtStatus::InvalidArgument, format!("buffer holds {len} values, need {}", values.len())));
        }
        std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(values);
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_counts_free(c: *mut QtCounts) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

type Runner = fn(&qtomo::qcore::ProbTable, &SamplerConfig) -> qtomo::Result<ChainOutput>;

unsafe fn run_sampler(
    runner: Runner,
    counts: *const QtCounts,
    cfg: *const QtSamplerConfig,
    out: *mut *mut QtMatrix,
    info: *mut QtRunInfo,
) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let counts = &in_ref(counts, "counts")?.inner;
        let c = *in_ref(cfg, "cfg")?;
        let iterations = usize::try_from(c.iterations)
            .map_err(|_| Failure(QtStatus::InvalidArgument, "iterations too large".into()))?;
        let burn_in = usize::try_from(c.burn_in)
            .map_err(|_| Failure(QtStatus::InvalidArgument, "burn_in too large".into()))?;
        let lambda = if c.lambda < 0.0 { counts.shots_per_setting() as f64 / 2.0 } else { c.lambda };
        let model = ModelConfig::new(c.alpha, lambda)?;
        let sc = SamplerConfig::new(c.beta_y, c.beta_z, iterations, c.seed, model).with_burn_in(burn_in);
        let res = runner(&empirical_frequencies(counts), &sc)?;
        if let Some(info) = info.as_mut() {
            *info = QtRunInfo {
                acceptance_rate: res.acceptance_rate,
                evaluations: res.evaluations,
                wall_time: res.wall_time,
            };
        }
        *out = boxed_matrix(res.rho_hat.into_matrix());
        Ok(())
    })
}

/// Adaptive Metropolis-Hastings estimate. `info` may be null.
///
/// # Safety
/// `counts` and `cfg` must be valid; `out` writable; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qt_estimate_amh(
    counts: *const QtCounts,
    cfg: *const QtSamplerConfig,
    out: *mut *mut QtMatrix,
    info: *mut QtRunInfo,
) -> QtStatus {
    run_sampler(run_adaptive_mh, counts, cfg, out, info)
}

/// Coordinate-wise Metropolis-Hastings estimate; `iterations` counts sweeps
/// and the step sizes are ignored. `info` may be null.
///
/// # Safety
/// `counts` and `cfg` must be valid; `out` writable; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qt_estimate_rmh(
    counts: *const QtCounts,
    cfg: *const QtSamplerConfig,
    out: *mut *mut QtMatrix,
    info: *mut QtRunInfo,
) -> QtStatus {
    run_sampler(run_naive_mh, counts, cfg, out, info)
}

/// Linear-inversion estimate (Hermitian, unit trace, possibly not PSD).
///
/// # Safety
/// `counts` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qt_linear_inversion(counts: *const QtCounts, out: *mut *mut QtMatrix) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let counts = &in_ref(counts, "counts")?.inner;
        *out = boxed_matrix(linear_inversion(&empirical_frequencies(counts)));
        Ok(())
    })
}

/// `||a - b||_F^2 / d^2`.
///
/// # Safety
/// `a`, `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qt_mse(a: *const QtMatrix, b: *const QtMatrix, out: *mut f64) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = mse(&in_ref(a, "a")?.inner, &in_ref(b, "b")?.inner)?;
        Ok(())
    })
}

/// Mean absolute difference of the sorted eigenvalues of two Hermitian
/// matrices.
///
/// # Safety
/// `a`, `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qt_maee(a: *const QtMatrix, b: *const QtMatrix, out: *mut f64) -> QtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = maee(&in_ref(a, "a")?.inner, &in_ref(b, "b")?.inner)?;
        Ok(())
    })
}
