#ifndef CONTACT_MECH_H
#define CONTACT_MECH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define CM_OK 0

#define CM_ERR_NULL 1

#define CM_ERR_UTF8 2

#define CM_ERR_PARSE 3

#define CM_ERR_DIMENSION 4

#define CM_ERR_NUMERIC 5

#define CM_ERR_CONFIG 6

#define CM_ERR_IO 7

#define CM_ERR_PANIC 8

#define CM_ERR_ARGUMENT 9

#define CM_METHOD_RK4 0

#define CM_METHOD_EULER 1

/**
 * Contact Hamiltonian system on the canonical chart (q, p, z).
 */
typedef struct CmHamiltonian CmHamiltonian;

/**
 * Lagrangian system on the tangent chart (q, v, z).
 */
typedef struct CmLagrangian CmLagrangian;

/**
 * Sampled integral curve.
 */
typedef struct CmTrajectory CmTrajectory;

/**
 * Copies the last error message of this thread, NUL-terminated and truncated to `len`.
 * Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t cm_last_error(char *buf, uintptr_t len);

/**
 * # Safety
 * `h` must be a NUL-terminated string and `out` a valid handle slot.
 */
int32_t cm_hamiltonian_new(uintptr_t n, const char *h, struct CmHamiltonian **out);

/**
 * # Safety
 * `h` must be null or come from `cm_hamiltonian_new`, and is not used afterwards.
 */
void cm_hamiltonian_free(struct CmHamiltonian *h);

/**
 * Chart dimension 2n+1, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t cm_hamiltonian_dim(const struct CmHamiltonian *h);

/**
 * Value of H at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles and `out` one.
 */
int32_t cm_hamiltonian_value(const struct CmHamiltonian *h,
                             const double *x,
                             uintptr_t len,
                             double *out);

/**
 * Components of the contact Hamiltonian vector field at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles and `out` `out_len` doubles.
 */
int32_t cm_hamiltonian_vector_field(const struct CmHamiltonian *h,
                                    const double *x,
                                    uintptr_t len,
                                    double *out,
                                    uintptr_t out_len);

/**
 * Jacobi bracket {f, g} of two expressions on the handle's chart.
 *
 * # Safety
 * `f`, `g` must be NUL-terminated, `x` must hold `len` doubles and `out` one.
 */
int32_t cm_hamiltonian_bracket(const struct CmHamiltonian *h,
                               const char *f,
                               const char *g,
                               const double *x,
                               uintptr_t len,
                               double *out);

/**
 * Integrates the Hamiltonian field from `x0` over [0, t_end].
 *
 * # Safety
 * `x0` must hold `len` doubles and `out` a valid handle slot.
 */
int32_t cm_hamiltonian_integrate(const struct CmHamiltonian *h,
                                 const double *x0,
                                 uintptr_t len,
                                 double dt,
                                 double t_end,
                                 int32_t method_id,
                                 struct CmTrajectory **out);

/**
 * # Safety
 * `l` must be a NUL-terminated string and `out` a valid handle slot.
 */
int32_t cm_lagrangian_new(uintptr_t n, const char *l, struct CmLagrangian **out);

/**
 * # Safety
 * `l` must be null or come from `cm_lagrangian_new`, and is not used afterwards.
 */
void cm_lagrangian_free(struct CmLagrangian *l);

/**
 * Energy E_L at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles and `out` one.
 */
int32_t cm_lagrangian_energy(const struct CmLagrangian *l,
                             const double *x,
                             uintptr_t len,
                             double *out);

/**
 * Herglotz vector field at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles and `out` `out_len` doubles.
 */
int32_t cm_lagrangian_herglotz(const struct CmLagrangian *l,
                               const double *x,
                               uintptr_t len,
                               double *out,
                               uintptr_t out_len);

/**
 * # Safety
 * `t` must be null or a live handle.
 */
uintptr_t cm_trajectory_len(const struct CmTrajectory *t);

/**
 * Time and state of sample `i`.
 *
 * # Safety
 * `time` must hold one double and `out` `out_len` doubles.
 */
int32_t cm_trajectory_row(const struct CmTrajectory *t,
                          uintptr_t i,
                          double *time,
                          double *out,
                          uintptr_t out_len);

/**
 * # Safety
 * `t` must be null or come from an integrate call, and is not used afterwards.
 */
void cm_trajectory_free(struct CmTrajectory *t);

/**
 * Runs a scenario file, writing its CSV and report into `out_dir`.
 * `all_pass` receives 1 when every diagnostic passes, else 0.
 *
 * # Safety
 * `path` and `out_dir` must be NUL-terminated and `all_pass` valid.
 */
int32_t cm_run_scenario(const char *path, const char *out_dir, uint64_t seed, int32_t *all_pass);

#endif  /* CONTACT_MECH_H */
