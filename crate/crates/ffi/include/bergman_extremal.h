/* C interface to the Bergman kernel / extremal function laboratory.
 * Generated by the crate build script; do not edit by hand. */

#ifndef BERGMAN_EXTREMAL_H
#define BERGMAN_EXTREMAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * ABI revision; bump on any incompatible change.
 */
#define BX_ABI_VERSION 1

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum BxStatus {
  BxStatusOk = 0,
  BxStatusNullPointer = 1,
  BxStatusInvalidHandle = 2,
  BxStatusInvalidParameter = 3,
  BxStatusSingular = 4,
  BxStatusUnsupported = 5,
  BxStatusRuntimeError = 6,
  BxStatusPanicked = 7,
} BxStatus;

/**
 * Opaque handle to a weighted node set.
 */
typedef struct BxSet {
  uint8_t _opaque[0];
} BxSet;

/**
 * Opaque handle to an orthonormalized section family.
 */
typedef struct BxSections {
  uint8_t _opaque[0];
} BxSections;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread (empty string when none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *bx_last_error_message(void);

/**
 * Equally spaced nodes with equal masses on a circle of the given radius
 * (between 0 exclusive and 1 inclusive), zero node weight.
 */
enum BxStatus bx_set_circle(uintptr_t node_count, double radius, struct BxSet **out);

/**
 * Chebyshev nodes with equal masses on the segment [-1, 1], node weight
 * canceling the field weight.
 */
enum BxStatus bx_set_interval(uintptr_t node_count, struct BxSet **out);

/**
 * Two concentric equally weighted circles (an even node count split
 * between them), zero node weight.
 */
enum BxStatus bx_set_annulus_pair(uintptr_t node_count,
                                  double r_inner,
                                  double r_outer,
                                  struct BxSet **out);

/**
 * Number of nodes in the set.
 */
enum BxStatus bx_set_node_count(const struct BxSet *set, uintptr_t *out);

/**
 * Release a set handle. Passing NULL is a no-op.
 */
void bx_set_free(struct BxSet *set);

/**
 * Orthonormalize the degree-`degree` section space against the set's
 * discrete inner product.
 */
enum BxStatus bx_orthonormalize(const struct BxSet *set, uintptr_t degree, struct BxSections **out);

/**
 * Degree of an orthonormalized family.
 */
enum BxStatus bx_sections_degree(const struct BxSections *sections, uintptr_t *out);

/**
 * Release a sections handle. Passing NULL is a no-op.
 */
void bx_sections_free(struct BxSections *sections);

/**
 * Log of the kernel diagonal at a point.
 */
enum BxStatus bx_bergman_log(const struct BxSections *sections,
                             int chart,
                             double re,
                             double im,
                             double *out);

/**
 * Log of the largest node value of the kernel diagonal.
 */
enum BxStatus bx_bm_constant_log(const struct BxSections *sections, double *out);

/**
 * Log of the mass-weighted trace of the kernel diagonal (equals
 * ln(degree + 1) exactly in exact arithmetic).
 */
enum BxStatus bx_trace_log(const struct BxSections *sections, double *out);

/**
 * Certified enclosure of the log extremal value at a point. `out_upper`
 * receives the dual certificate (upper bound), `out_lower` the primal one;
 * `out_gap` and `out_converged` may be NULL when not needed.
 */
enum BxStatus bx_phi_log(const struct BxSet *set,
                         uintptr_t degree,
                         int chart,
                         double re,
                         double im,
                         double tol,
                         uintptr_t max_iter,
                         double *out_upper,
                         double *out_lower,
                         double *out_gap,
                         int *out_converged);

/**
 * Closed-form extremal value for a built-in scenario (0 = circle,
 * 1 = interval). Scenario 2 (annulus_pair) has no closed form and returns
 * `BX_STATUS_UNSUPPORTED`.
 */
enum BxStatus bx_extremal_value(int scenario, int chart, double re, double im, double *out);

/**
 * The ABI revision compiled into the library.
 */
uint32_t bx_abi_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_EXTREMAL_H */
