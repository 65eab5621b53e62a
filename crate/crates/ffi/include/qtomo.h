#ifndef QTOMO_H
#define QTOMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum QtStatus {
  QT_STATUS_OK = 0,
  QT_STATUS_NULL_POINTER = 1,
  QT_STATUS_INVALID_ARGUMENT = 2,
  QT_STATUS_DIMENSION = 3,
  QT_STATUS_INVALID_DENSITY = 4,
  QT_STATUS_DEGENERATE = 5,
  QT_STATUS_IO = 6,
  QT_STATUS_PARSE = 7,
  QT_STATUS_PANIC = 8,
} QtStatus;

/*
 Measurement counts for all settings and outcomes.
 */
typedef struct QtCounts QtCounts;

/*
 Dense complex matrix (a density matrix or an estimate).
 */
typedef struct QtMatrix QtMatrix;

/*
 Sampler settings. A negative `lambda` selects the default `m / 2`; a zero
 `burn_in` is used as given.
 */
typedef struct QtSamplerConfig {
  double beta_y;
  double beta_z;
  uint64_t iterations;
  uint64_t burn_in;
  uint64_t seed;
  double alpha;
  double lambda;
} QtSamplerConfig;

/*
 Diagnostics of one sampler run.
 */
typedef struct QtRunInfo {
  double acceptance_rate;
  uint64_t evaluations;
  double wall_time;
} QtRunInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread; empty after a
 successful call. Valid until the next `qt_*` call on the same thread.
 */
const char *qt_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *qt_version(void);

/*
 Fills `cfg` with defaults: beta (0.03, 0.02), 30000 iterations, 3000
 burn-in, seed 0, alpha 1, lambda = m / 2.

 # Safety
 `cfg` must be null or point to writable memory for one `QtSamplerConfig`.
 */
enum QtStatus qt_sampler_config_default(struct QtSamplerConfig *cfg);

/*
 Rank-2 reference state on `n` qubits.

 # Safety
 `out` must be null or point to writable storage for one pointer.
 */
enum QtStatus qt_true_state_rank2(size_t n, struct QtMatrix **out);

/*
 Full-rank reference state: equal mixture of `2^n` random pure states
 drawn from `seed`.

 # Safety
 `out` must be null or point to writable storage for one pointer.
 */
enum QtStatus qt_true_state_mixed(size_t n, uint64_t seed, struct QtMatrix **out);

/*
 Copies a `d x d` matrix from row-major buffers. `d` must be a power of two
 between 2 and 256. The matrix is not checked for being a valid state;
 functions that need one check it themselves.

 # Safety
 `re` and `im` must each point to `d * d` readable doubles; `out` must be
 writable.
 */
enum QtStatus qt_matrix_from_parts(size_t d,
                                   const double *re,
                                   const double *im,
                                   struct QtMatrix **out);

/*
 Side length of the matrix, or 0 for a null handle.

 # Safety
 `m` must be null or a live handle.
 */
size_t qt_matrix_dim(const struct QtMatrix *m);

/*
 Copies the matrix into row-major buffers of length `len >= d * d`.

 # Safety
 `m` must be a live handle; `re` and `im` must each hold `len` doubles.
 */
enum QtStatus qt_matrix_copy(const struct QtMatrix *m, double *re, double *im, size_t len);

/*
 Writes the matrix as `row,col,re,im` CSV.

 # Safety
 `m` must be a live handle and `path` a NUL-terminated string.
 */
enum QtStatus qt_matrix_save(const struct QtMatrix *m, const char *path);

/*
 Reads a `row,col,re,im` CSV.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QtStatus qt_matrix_load(const char *path, struct QtMatrix **out);

/*
 # Safety
 `m` must be null or a handle not yet freed.
 */
void qt_matrix_free(struct QtMatrix *m);

/*
 Simulates `m` shots per setting from the state `rho`.

 # Safety
 `rho` must be a live handle; `out` must be writable.
 */
enum QtStatus qt_simulate_counts(const struct QtMatrix *rho,
                                 uint64_t m,
                                 uint64_t seed,
                                 struct QtCounts **out);

/*
 Builds a count table for `n` qubits from `len = 3^n * 2^n` counts ordered
 setting-major (settings and outcomes in lexicographic order, first qubit
 most significant). Every setting must have the same total.

 # Safety
 `counts` must point to `len` readable values; `out` must be writable.
 */
enum QtStatus qt_counts_from_buffer(size_t n,
                                    const uint64_t *counts,
                                    size_t len,
                                    struct QtCounts **out);

/*
 Reads a `setting,outcome,count` CSV.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QtStatus qt_counts_load(const char *path, struct QtCounts **out);

/*
 Writes a `setting,outcome,count` CSV.

 # Safety
 `c` must be a live handle and `path` a NUL-terminated string.
 */
enum QtStatus qt_counts_save(const struct QtCounts *c, const char *path);

/*
 Number of qubits, or 0 for a null handle.

 # Safety
 `c` must be null or a live handle.
 */
size_t qt_counts_num_qubits(const struct QtCounts *c);

/*
 Number of cells, `3^n * 2^n`, or 0 for a null handle.

 # Safety
 `c` must be null or a live handle.
 */
size_t qt_counts_len(const struct QtCounts *c);

/*
 Shots per setting, or 0 for a null handle.

 # Safety
 `c` must be null or a live handle.
 */
uint64_t qt_counts_shots(const struct QtCounts *c);

/*
 Copies the counts (setting-major) into `out`, which holds `len` values.

 # Safety
 `c` must be a live handle; `out` must hold `len` values.
 */
enum QtStatus qt_counts_copy(const struct QtCounts *c, uint64_t *out, size_t len);

/*
 # Safety
 `c` must be null or a handle not yet freed.
 */
void qt_counts_free(struct QtCounts *c);

/*
 Adaptive Metropolis-Hastings estimate. `info` may be null.

 # Safety
 `counts` and `cfg` must be valid; `out` writable; `info` null or writable.
 */
enum QtStatus qt_estimate_amh(const struct QtCounts *counts,
                              const struct QtSamplerConfig *cfg,
                              struct QtMatrix **out,
                              struct QtRunInfo *info);

/*
 Coordinate-wise Metropolis-Hastings estimate; `iterations` counts sweeps
 and the step sizes are ignored. `info` may be null.

 # Safety
 `counts` and `cfg` must be valid; `out` writable; `info` null or writable.
 */
enum QtStatus qt_estimate_rmh(const struct QtCounts *counts,
                              const struct QtSamplerConfig *cfg,
                              struct QtMatrix **out,
                              struct QtRunInfo *info);

/*
 Linear-inversion estimate (Hermitian, unit trace, possibly not PSD).

 # Safety
 `counts` must be a live handle; `out` writable.
 */
enum QtStatus qt_linear_inversion(const struct QtCounts *counts, struct QtMatrix **out);

/*
 `||a - b||_F^2 / d^2`.

 # Safety
 `a`, `b` must be live handles; `out` writable.
 */
enum QtStatus qt_mse(const struct QtMatrix *a, const struct QtMatrix *b, double *out);

/*
 Mean absolute difference of the sorted eigenvalues of two Hermitian
 matrices.

 # Safety
 `a`, `b` must be live handles; `out` writable.
 */
enum QtStatus qt_maee(const struct QtMatrix *a, const struct QtMatrix *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTOMO_H */
