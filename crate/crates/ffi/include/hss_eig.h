#ifndef HSS_EIG_H
#define HSS_EIG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum hss_eig_status {
  HSS_EIG_STATUS_OK = 0,
  HSS_EIG_STATUS_INVALID_ARGUMENT = 1,
  HSS_EIG_STATUS_NULL_POINTER = 2,
  HSS_EIG_STATUS_NUMERICAL = 3,
  HSS_EIG_STATUS_IO = 4,
  HSS_EIG_STATUS_BUFFER_TOO_SMALL = 5,
  HSS_EIG_STATUS_PANIC = 6,
} hss_eig_status;

typedef enum hss_eig_method {
  HSS_EIG_METHOD_DENSE_DC = 0,
  HSS_EIG_METHOD_ADC_RAND = 1,
} hss_eig_method;

// Opaque solver configuration.
typedef struct hss_eig_config hss_eig_config;

// Opaque symmetric tridiagonal matrix.
typedef struct hss_eig_matrix hss_eig_matrix;

// Opaque eigendecomposition.
typedef struct hss_eig_result hss_eig_result;

// Flop counts by phase.
typedef struct hss_eig_flops {
  uint64_t secular;
  uint64_t dense_update;
  uint64_t hss_construct;
  uint64_t hss_mult;
} hss_eig_flops;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *hss_eig_last_error(void);

// Copy `n` diagonal and `n - 1` off-diagonal entries into a new matrix.
//
// # Safety
// `a` must point to `n` values, `b` to `n - 1` values (it may be null when
// `n == 1`) and `out` to writable storage for one handle.
enum hss_eig_status hss_eig_matrix_new(const double *a,
                                       const double *b,
                                       size_t n,
                                       struct hss_eig_matrix **out);

// Build a named test matrix (`clement`, `legendre`, `laguerre`, `hermite`,
// `toeplitz`).
//
// # Safety
// `family` must be a nul-terminated string and `out` writable.
enum hss_eig_status hss_eig_matrix_generate(const char *family,
                                            size_t n,
                                            struct hss_eig_matrix **out);

// Read a matrix file.
//
// # Safety
// `path` must be a nul-terminated string and `out` writable.
enum hss_eig_status hss_eig_matrix_read(const char *path, struct hss_eig_matrix **out);

// Order of the matrix, zero for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t hss_eig_matrix_order(const struct hss_eig_matrix *m);

// # Safety
// `m` must be null or a handle not yet freed.
void hss_eig_matrix_free(struct hss_eig_matrix *m);

// Default configuration.
//
// # Safety
// `out` must be writable.
enum hss_eig_status hss_eig_config_new(struct hss_eig_config **out);

// # Safety
// `c` must be a live config handle.
enum hss_eig_status hss_eig_config_set_method(struct hss_eig_config *c, enum hss_eig_method method);

// # Safety
// `c` must be a live config handle.
enum hss_eig_status hss_eig_config_set_seed(struct hss_eig_config *c, uint64_t seed);

// Set the HSS threshold and leaf size together; the threshold must be at
// least four leaves.
//
// # Safety
// `c` must be a live config handle.
enum hss_eig_status hss_eig_config_set_hss(struct hss_eig_config *c,
                                           size_t threshold,
                                           size_t leaf_size);

// # Safety
// `c` must be a live config handle.
enum hss_eig_status hss_eig_config_set_oversample(struct hss_eig_config *c, size_t oversample);

// # Safety
// `c` must be a live config handle.
enum hss_eig_status hss_eig_config_set_base_size(struct hss_eig_config *c, size_t base_size);

// # Safety
// `c` must be null or a handle not yet freed.
void hss_eig_config_free(struct hss_eig_config *c);

// Eigendecomposition of `m`; a null `config` means the defaults.
//
// # Safety
// `m` must be a live matrix handle, `config` null or live, `out` writable.
enum hss_eig_status hss_eig_solve(const struct hss_eig_matrix *m,
                                  const struct hss_eig_config *config,
                                  struct hss_eig_result **out);

// Order of the decomposition, zero for a null handle.
//
// # Safety
// `r` must be null or a live handle.
size_t hss_eig_result_order(const struct hss_eig_result *r);

// Copy the ascending eigenvalues into `buf`, which holds `len` values.
//
// # Safety
// `r` must be live and `buf` must hold `len` values.
enum hss_eig_status hss_eig_result_eigenvalues(const struct hss_eig_result *r,
                                               double *buf,
                                               size_t len);

// Copy the eigenvectors, column-major, into `buf` of `len >= n * n` values.
//
// # Safety
// `r` must be live and `buf` must hold `len` values.
enum hss_eig_status hss_eig_result_eigenvectors(const struct hss_eig_result *r,
                                                double *buf,
                                                size_t len);

// # Safety
// `r` must be live and `out` writable.
enum hss_eig_status hss_eig_result_flops(const struct hss_eig_result *r, struct hss_eig_flops *out);

// # Safety
// `r` must be null or a handle not yet freed.
void hss_eig_result_free(struct hss_eig_result *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HSS_EIG_H */
