#ifndef OMEGA_H
#define OMEGA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum OmegaStatus {
  OMEGA_STATUS_OK = 0,
  OMEGA_STATUS_NULL_POINTER = 1,
  OMEGA_STATUS_INVALID_ARGUMENT = 2,
  OMEGA_STATUS_NOT_UNITARY = 3,
  OMEGA_STATUS_DOMAIN = 4,
  OMEGA_STATUS_NUMERICAL = 5,
  OMEGA_STATUS_SCALE = 6,
  OMEGA_STATUS_IO = 7,
  OMEGA_STATUS_PANIC = 8,
  OMEGA_STATUS_BUFFER_TOO_SMALL = 9,
} OmegaStatus;

/**
 * Correlator evaluation route, passed as `uint32_t`.
 */
typedef enum OmegaRoute {
  OMEGA_ROUTE_SECULAR = 0,
  OMEGA_ROUTE_CHARACTER = 1,
  OMEGA_ROUTE_FOCK = 2,
  OMEGA_ROUTE_WEYL = 3,
} OmegaRoute;

/**
 * Opaque unitary matrix.
 */
typedef struct OmegaUnitary OmegaUnitary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *omega_version(void);

/**
 * Copies the calling thread's last error message into `buf`, truncating
 * to `len - 1` bytes plus a NUL. Returns the untruncated length including
 * the NUL, so a call with `len == 0` sizes the buffer.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null when `len == 0`.
 */
size_t omega_last_error_message(char *buf, size_t len);

/**
 * Builds a unitary from row-major parts. `tolerance` bounds the residual
 * `max|U^dag U - I|`.
 *
 * # Safety
 * `re` and `im` must hold `n * n` doubles; `out` must be writable.
 */
enum OmegaStatus omega_unitary_from_parts(size_t n,
                                          const double *re,
                                          const double *im,
                                          double tolerance,
                                          struct OmegaUnitary **out);

/**
 * Haar-random unitary from the `(seed, stream)` ChaCha stream.
 *
 * # Safety
 * `out` must be writable.
 */
enum OmegaStatus omega_unitary_haar(size_t n,
                                    uint64_t seed,
                                    uint64_t stream,
                                    struct OmegaUnitary **out);

/**
 * Random diagonal unitary with independent uniform phases.
 *
 * # Safety
 * `out` must be writable.
 */
enum OmegaStatus omega_unitary_poisson(size_t n,
                                       uint64_t seed,
                                       uint64_t stream,
                                       struct OmegaUnitary **out);

/**
 * Kicked map on `n` sites with the given kick strengths.
 *
 * # Safety
 * `strengths` must hold `len` doubles; `out` must be writable.
 */
enum OmegaStatus omega_unitary_kicked(size_t n,
                                      const double *strengths,
                                      size_t len,
                                      struct OmegaUnitary **out);

/**
 * Reads a matrix file in the CLI's JSON format.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum OmegaStatus omega_unitary_read_json(const char *path,
                                         double tolerance,
                                         struct OmegaUnitary **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `u` must come from this library and not be freed twice.
 */
void omega_unitary_free(struct OmegaUnitary *u);

/**
 * # Safety
 * `u` must be a live handle; `out_n` must be writable.
 */
enum OmegaStatus omega_unitary_dim(const struct OmegaUnitary *u, size_t *out_n);

/**
 * Eigenphases in `[0, 2pi)`, ascending. `len` must be at least `n`.
 *
 * # Safety
 * `u` must be a live handle; `out` must hold `len` doubles.
 */
enum OmegaStatus omega_unitary_eigenphases(const struct OmegaUnitary *u, double *out, size_t len);

/**
 * Coefficients `a_0..a_n` of `Det(1 - sU)`. `len` must be at least `n + 1`.
 *
 * # Safety
 * `u` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum OmegaStatus omega_unitary_secular(const struct OmegaUnitary *u,
                                       double *re,
                                       double *im,
                                       size_t len);

/**
 * Correlator on the unit circle at `gamma = exp(i x / N)` for each of the
 * `len` values of `xs`. `route` is an [`OmegaRoute`].
 *
 * # Safety
 * `u` must be a live handle; `xs`, `re`, `im` must hold `len` doubles.
 */
enum OmegaStatus omega_correlator_x(const struct OmegaUnitary *u,
                                    uint32_t route,
                                    const double *xs,
                                    size_t len,
                                    double *re,
                                    double *im);

/**
 * Correlator at arbitrary complex `gamma`, principal branch for `gamma^(N/2)`.
 *
 * # Safety
 * `u` must be a live handle; all four arrays must hold `len` doubles.
 */
enum OmegaStatus omega_correlator_gamma(const struct OmegaUnitary *u,
                                        uint32_t route,
                                        const double *gamma_re,
                                        const double *gamma_im,
                                        size_t len,
                                        double *re,
                                        double *im);

/**
 * Correlator averaged under the isotropic heat kernel at `kernel_time`.
 *
 * # Safety
 * `u` must be a live handle; `xs`, `re`, `im` must hold `len` doubles.
 */
enum OmegaStatus omega_isotropic_correlator(const struct OmegaUnitary *u,
                                            double kernel_time,
                                            const double *xs,
                                            size_t len,
                                            double *re,
                                            double *im);

/**
 * Exact crossover curve as `values[k] * exp(ln_scale)`.
 *
 * # Safety
 * `xs` and `values` must hold `len` doubles; `ln_scale` must be writable.
 */
enum OmegaStatus omega_crossover_exact_scaled(size_t n,
                                              double eps,
                                              const double *xs,
                                              size_t len,
                                              double *values,
                                              double *ln_scale);

/**
 * Root `y_eps` of the supercritical saddle equation (`eps > 1`).
 *
 * # Safety
 * `out` must be writable.
 */
enum OmegaStatus omega_solve_y_eps(double eps, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMEGA_H */
