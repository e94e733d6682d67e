#ifndef ROTAVG_H
#define ROTAVG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum RavStatus {
  RAV_STATUS_OK = 0,
  RAV_STATUS_NULL_POINTER = 1,
  RAV_STATUS_INVALID_ARGUMENT = 2,
  RAV_STATUS_PARSE = 3,
  RAV_STATUS_IO = 4,
  RAV_STATUS_NUMERICAL = 5,
  RAV_STATUS_DISCONNECTED = 6,
  RAV_STATUS_DEGENERATE = 7,
  RAV_STATUS_PANIC = 8,
} RavStatus;

typedef enum RavInit {
  RAV_INIT_SPANNING_TREE = 0,
  RAV_INIT_IDENTITY = 1,
  RAV_INIT_RANDOM = 2,
  /**
   * Start from the stack passed to `rav_solve`.
   */
  RAV_INIT_EXPLICIT = 3,
} RavInit;

typedef enum RavSweep {
  RAV_SWEEP_GAUSS_SEIDEL = 0,
  RAV_SWEEP_JACOBI = 1,
} RavSweep;

typedef enum RavAlgorithm {
  RAV_ALGORITHM_BCD = 0,
  RAV_ALGORITHM_SUM = 1,
} RavAlgorithm;

/**
 * Opaque measurement graph.
 */
typedef struct RavGraph RavGraph;

/**
 * Opaque stack of rotations.
 */
typedef struct RavStack RavStack;

typedef struct RavSolverOptions {
  double epsilon;
  size_t max_iter;
  enum RavInit init;
  /**
   * Seed for `RAV_INIT_RANDOM`.
   */
  uint64_t seed;
  bool parallel;
  enum RavSweep sweep;
} RavSolverOptions;

typedef struct RavSolveResult {
  double objective;
  size_t iterations;
  bool converged;
  double time_s;
  /**
   * SUM shift; NaN for BCD.
   */
  double mu;
} RavSolveResult;

typedef struct RavCertificate {
  double min_eig;
  double asymmetry;
  double tol;
  bool optimal;
} RavCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library from the same thread.
 */
const char *rav_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rav_version(void);

/**
 * Builds a graph from `m` edges: `i[k]`, `j[k]` and nine entries of
 * `rel[9k..9k+9]` per edge.
 *
 * # Safety
 * `i` and `j` must point to `m` values, `rel` to `9m` values, `out` to a
 * writable handle slot. Null arrays are accepted when `m == 0`.
 */
enum RavStatus rav_graph_new(size_t n,
                             size_t m,
                             const size_t *i,
                             const size_t *j,
                             const double *rel,
                             struct RavGraph **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable handle slot.
 */
enum RavStatus rav_graph_read(const char *path, struct RavGraph **out);

/**
 * # Safety
 * `graph` must be a live handle and `path` a NUL-terminated string.
 */
enum RavStatus rav_graph_write(const struct RavGraph *graph, const char *path);

/**
 * Synthetic instance; `phi` is the noise angle standard deviation and `p`
 * the edge-drop probability. `out_truth` may be null.
 *
 * # Safety
 * `out_graph` must be a writable handle slot; `out_truth` null or writable.
 */
enum RavStatus rav_graph_generate(size_t n,
                                  double phi,
                                  double p,
                                  uint64_t seed,
                                  struct RavGraph **out_graph,
                                  struct RavStack **out_truth);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void rav_graph_free(struct RavGraph *graph);

/**
 * Vertex count; 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t rav_graph_vertex_count(const struct RavGraph *graph);

/**
 * Edge count; 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t rav_graph_edge_count(const struct RavGraph *graph);

/**
 * # Safety
 * `out` must be a writable handle slot.
 */
enum RavStatus rav_stack_identity(size_t n, struct RavStack **out);

/**
 * Builds a stack from `9n` row-major entries; each block must be a rotation.
 *
 * # Safety
 * `data` must point to `9n` values and `out` to a writable handle slot.
 */
enum RavStatus rav_stack_new(size_t n, const double *data, struct RavStack **out);

/**
 * # Safety
 * `stack` must be null or a handle not yet freed.
 */
void rav_stack_free(struct RavStack *stack);

/**
 * Number of rotations; 0 for a null handle.
 *
 * # Safety
 * `stack` must be null or a live handle.
 */
size_t rav_stack_len(const struct RavStack *stack);

/**
 * Copies rotation `k` into `out[0..9]`.
 *
 * # Safety
 * `stack` must be a live handle and `out` must have room for nine values.
 */
enum RavStatus rav_stack_get(const struct RavStack *stack, size_t k, double *out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable handle slot.
 */
enum RavStatus rav_stack_read(const char *path, struct RavStack **out);

/**
 * # Safety
 * `stack` must be a live handle and `path` a NUL-terminated string.
 */
enum RavStatus rav_stack_write(const struct RavStack *stack, const char *path);

struct RavSolverOptions rav_solver_options_default(void);

/**
 * Runs BCD or SUM. `options` may be null for defaults; `init_stack` is
 * read only with `RAV_INIT_EXPLICIT`; `out_result` may be null.
 *
 * # Safety
 * Handles must be live; `out_stack` must be a writable handle slot.
 */
enum RavStatus rav_solve(const struct RavGraph *graph,
                         enum RavAlgorithm algorithm,
                         const struct RavSolverOptions *options,
                         const struct RavStack *init_stack,
                         struct RavStack **out_stack,
                         struct RavSolveResult *out_result);

/**
 * # Safety
 * Handles must be live and `out` writable.
 */
enum RavStatus rav_objective(const struct RavGraph *graph,
                             const struct RavStack *stack,
                             double *out);

/**
 * Optimality certificate; `tol <= 0` selects the default `1e-6 · n`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum RavStatus rav_certify(const struct RavGraph *graph,
                           const struct RavStack *stack,
                           double tol,
                           struct RavCertificate *out);

/**
 * Minimizes `tr(A X)` over rotations `X`; `a` and `out_x` hold nine
 * row-major values. `out_value` may be null.
 *
 * # Safety
 * `a` must point to nine values and `out_x` must have room for nine.
 */
enum RavStatus rav_solve_losso(const double *a, double *out_x, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTAVG_H */
