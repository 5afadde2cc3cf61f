#ifndef ATTRACTOR_H
#define ATTRACTOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AttrStatus {
  ATTR_STATUS_OK = 0,
  // Invalid argument or configuration.
  ATTR_STATUS_INVALID_ARGUMENT = 1,
  // The orbit escaped.
  ATTR_STATUS_ESCAPE = 2,
  // Numerical hard failure (singular matrix, no convergence, ...).
  ATTR_STATUS_NUMERICAL = 3,
  ATTR_STATUS_IO = 4,
  ATTR_STATUS_NULL_POINTER = 5,
  // A Rust panic was caught at the boundary.
  ATTR_STATUS_PANIC = 6,
} AttrStatus;

typedef enum AttrStructure {
  ATTR_STRUCTURE_STABLE_NODE = 0,
  ATTR_STRUCTURE_STABLE_FOCUS = 1,
  ATTR_STRUCTURE_SADDLE_ONE_UNSTABLE = 2,
  ATTR_STRUCTURE_SADDLE_FOCUS_ONE_UNSTABLE = 3,
  ATTR_STRUCTURE_SADDLE_TWO_UNSTABLE = 4,
  ATTR_STRUCTURE_SADDLE_FOCUS_TWO_UNSTABLE = 5,
  ATTR_STRUCTURE_UNSTABLE = 6,
  ATTR_STRUCTURE_ON_BIFURCATION = 7,
} AttrStructure;

typedef enum AttrRegion {
  ATTR_REGION_STABILITY_TRIANGLE = 0,
  ATTR_REGION_D1 = 1,
  ATTR_REGION_D2 = 2,
  ATTR_REGION_D3 = 3,
  ATTR_REGION_D4 = 4,
  ATTR_REGION_OTHER = 5,
} AttrRegion;

typedef enum AttrOutcome {
  ATTR_OUTCOME_PSEUDOHYPERBOLIC = 0,
  ATTR_OUTCOME_QUASIATTRACTOR = 1,
  ATTR_OUTCOME_INCONCLUSIVE = 2,
} AttrOutcome;

// Result of a full LMP analysis.
typedef struct AttrLmp AttrLmp;

// A map or flow.
typedef struct AttrSystem AttrSystem;

// Eigen-structure of the fixed point `O` of the generalized Hénon map.
typedef struct AttrFixedPoint {
  double eigen_re[3];
  double eigen_im[3];
  enum AttrStructure structure;
  enum AttrRegion region;
  // NaN when the saddle value is undefined.
  double sigma;
} AttrFixedPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 if there is none.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
uintptr_t attr_last_error_message(char *buf, uintptr_t len);

// Roots of `λ³ − Aλ² − Cλ − B`, sorted by descending modulus.
//
// # Safety
// `re` and `im` must each point to 3 writable doubles.
enum AttrStatus attr_char_roots(double a, double b, double c, double *re, double *im);

// Eigenvalues of the extended Lorenz system at the origin.
//
// # Safety
// `re` and `im` must each point to 4 writable doubles.
enum AttrStatus attr_extended_lorenz_eigen(double sigma,
                                           double r,
                                           double b,
                                           double mu,
                                           double *re,
                                           double *im);

// Classifies `O` for parameters `(A, B, C)`; `tol` is the half-width of
// the bifurcation band around `|λ| = 1`.
//
// # Safety
// `out` must point to a writable [`AttrFixedPoint`].
enum AttrStatus attr_classify_fixed_point(double a,
                                          double b,
                                          double c,
                                          double tol,
                                          struct AttrFixedPoint *out);

// Generalized Hénon map `x̄ = y, ȳ = z, z̄ = Bx + Az + Cy + f(y, z)`.
//
// `coeffs` holds the seven coefficients of `f` in the order
// `y², yz, z², y³, y²z, yz², z³`; null selects `f = −z²`.
//
// # Safety
// `coeffs` must be null or point to 7 doubles; `out` must be writable.
enum AttrStatus attr_system_ghm(double a,
                                double b,
                                double c,
                                const double *coeffs,
                                struct AttrSystem **out);

// # Safety
// `out` must be writable.
enum AttrStatus attr_system_lorenz(double sigma, double r, double b, struct AttrSystem **out);

// # Safety
// `out` must be writable.
enum AttrStatus attr_system_extended_lorenz(double sigma,
                                            double r,
                                            double b,
                                            double mu,
                                            struct AttrSystem **out);

// Phase-space dimension of `system` (0 for null).
//
// # Safety
// `system` must be null or a live handle.
uintptr_t attr_system_dimension(const struct AttrSystem *system);

// # Safety
// `system` must be null or a handle not yet freed.
void attr_system_free(struct AttrSystem *system);

// Lyapunov spectrum from `x0` (length `dim`), written descending into
// `exponents` (length `dim`). Zero `transient` or `measure` selects the
// default budget.
//
// # Safety
// `system` must be a live handle; `x0` and `exponents` must hold `dim` doubles.
enum AttrStatus attr_lyapunov(const struct AttrSystem *system,
                              const double *x0,
                              uintptr_t dim,
                              uintptr_t transient,
                              uintptr_t measure,
                              double *exponents);

// Runs spectrum, backward field, LMP graphs and verdict with default
// settings (`stride` 0 chooses automatically, `seed` selects the pairs).
//
// # Safety
// `system` must be a live handle; `x0` must hold `dim` doubles; `out` must
// be writable.
enum AttrStatus attr_lmp_analyze(const struct AttrSystem *system,
                                 const double *x0,
                                 uintptr_t dim,
                                 uintptr_t transient,
                                 uintptr_t measure,
                                 uintptr_t stride,
                                 uint64_t seed,
                                 struct AttrLmp **out);

// # Safety
// `lmp` must be a live handle.
enum AttrOutcome attr_lmp_outcome(const struct AttrLmp *lmp);

// Smallest `dx` in the forbidden band divided by the attractor diameter;
// infinite when the band is empty, NaN for null.
//
// # Safety
// `lmp` must be null or a live handle.
double attr_lmp_relative_gap(const struct AttrLmp *lmp);

// Stride of the deciding graph (0 for null).
//
// # Safety
// `lmp` must be null or a live handle.
uintptr_t attr_lmp_stride(const struct AttrLmp *lmp);

// Number of `(dx, dphi)` pairs of the deciding graph (0 for null).
//
// # Safety
// `lmp` must be null or a live handle.
uintptr_t attr_lmp_pair_count(const struct AttrLmp *lmp);

// Copies up to `cap` pairs of the deciding graph; returns the number copied.
//
// # Safety
// `lmp` must be a live handle; `dx` and `dphi` must hold `cap` doubles.
uintptr_t attr_lmp_pairs(const struct AttrLmp *lmp, double *dx, double *dphi, uintptr_t cap);

// # Safety
// `lmp` must be null or a handle not yet freed.
void attr_lmp_free(struct AttrLmp *lmp);

// Lyapunov diagram of the map with `f = −z²` at fixed `B` over a
// `width × height` grid spanning the window (corners included, row 0 at
// `c_max`). Class codes 0–6 are written row-major into `classes`.
// Zero `transient` or `measure` selects the default budget.
//
// # Safety
// `classes` must hold `width * height` bytes.
enum AttrStatus attr_diagram(double a_min,
                             double a_max,
                             double c_min,
                             double c_max,
                             uintptr_t width,
                             uintptr_t height,
                             double b,
                             uintptr_t transient,
                             uintptr_t measure,
                             uint8_t *classes);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATTRACTOR_H */
