#ifndef CNDP_H
#define CNDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CndpStatus {
  CNDP_STATUS_OK = 0,
  CNDP_STATUS_NULL_POINTER = 1,
  CNDP_STATUS_INVALID_UTF8 = 2,
  CNDP_STATUS_PARSE_ERROR = 3,
  CNDP_STATUS_INVALID_INSTANCE = 4,
  CNDP_STATUS_NO_FINITE_PATH = 5,
  CNDP_STATUS_NOT_CONVERGED = 6,
  CNDP_STATUS_INVALID_ARGUMENT = 7,
  CNDP_STATUS_UNSATISFIED = 8,
  CNDP_STATUS_NUMERICAL_FAILURE = 9,
  CNDP_STATUS_PANIC = 10,
} CndpStatus;

typedef enum CndpAlgorithm {
  CNDP_ALGORITHM_RELAX = 0,
  CNDP_ALGORITHM_SINGLE_SINK = 1,
  CNDP_ALGORITHM_BTE = 2,
  CNDP_ALGORITHM_SU = 3,
  CNDP_ALGORITHM_BEST2 = 4,
  CNDP_ALGORITHM_BUDGETED = 5,
} CndpAlgorithm;

typedef struct CndpInstance CndpInstance;

typedef struct CndpSolution CndpSolution;

/**
 * Certificate summary of a solution.
 */
typedef struct CndpSummary {
  double relaxation_cost;
  double routing_cost;
  double capacity_cost;
  double total;
  double ratio;
  double guarantee;
  double equilibrium_gap;
} CndpSummary;

/**
 * Guarantee constants of a latency class. `guarantee_budget` is infinite
 * for the general convex class.
 */
typedef struct CndpConstants {
  double mu;
  double gamma;
  double guarantee_single;
  double guarantee_best2;
  double p_star;
  double guarantee_budget;
} CndpConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *cndp_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void cndp_string_free(char *s);

/**
 * Parses an instance from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CndpStatus cndp_instance_from_json(const char *json, struct CndpInstance **out);

/**
 * Compiles a DIMACS 3-CNF formula into an instance.
 *
 * # Safety
 * `dimacs` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CndpStatus cndp_gadget_compile(const char *dimacs, double epsilon, struct CndpInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library not yet freed.
 */
void cndp_instance_free(struct CndpInstance *inst);

/**
 * # Safety
 * `inst` must be null or a live instance handle.
 */
size_t cndp_instance_num_edges(const struct CndpInstance *inst);

/**
 * # Safety
 * `inst` must be null or a live instance handle.
 */
size_t cndp_instance_num_commodities(const struct CndpInstance *inst);

/**
 * Serializes an instance; release the result with [`cndp_string_free`].
 *
 * # Safety
 * `inst` must be a live instance handle and `out` a valid pointer.
 */
enum CndpStatus cndp_instance_to_json(const struct CndpInstance *inst, char **out);

/**
 * Runs an algorithm. Budgeted runs need an instance with a budget.
 *
 * # Safety
 * `inst` must be a live instance handle and `out` a valid pointer.
 */
enum CndpStatus cndp_solve(const struct CndpInstance *inst,
                           enum CndpAlgorithm algorithm,
                           bool dispatch_only,
                           struct CndpSolution **out);

/**
 * # Safety
 * `sol` must be null or a handle from this library not yet freed.
 */
void cndp_solution_free(struct CndpSolution *sol);

/**
 * # Safety
 * `sol` must be a live solution handle and `out` a valid pointer.
 */
enum CndpStatus cndp_solution_summary(const struct CndpSolution *sol, struct CndpSummary *out);

/**
 * Copies per-edge capacities, in instance edge order, into `buf`, which
 * must hold at least `len` values with `len` equal to the edge count.
 *
 * # Safety
 * `sol` must be a live solution handle and `buf` valid for `len` writes.
 */
enum CndpStatus cndp_solution_capacities(const struct CndpSolution *sol, double *buf, size_t len);

/**
 * Serializes capacities, flows and certificate; release with [`cndp_string_free`].
 *
 * # Safety
 * `sol` must be a live solution handle and `out` a valid pointer.
 */
enum CndpStatus cndp_solution_to_json(const struct CndpSolution *sol, char **out);

/**
 * Constants of a class written as `poly:<degree>`, `concave` or `convex`.
 *
 * # Safety
 * `class_tag` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CndpStatus cndp_constants(const char *class_tag, struct CndpConstants *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CNDP_H */
