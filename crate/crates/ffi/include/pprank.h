#ifndef PPRANK_H
#define PPRANK_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PprankStatus {
  PPRANK_STATUS_OK = 0,
  PPRANK_STATUS_NULL_POINTER = 1,
  PPRANK_STATUS_INVALID_ARGUMENT = 2,
  PPRANK_STATUS_OUT_OF_RANGE = 3,
  PPRANK_STATUS_PROTOCOL = 4,
  PPRANK_STATUS_IO = 5,
  PPRANK_STATUS_PANIC = 6,
} PprankStatus;

/**
 * A reranking problem for one user.
 */
typedef struct PprankProblem PprankProblem;

/**
 * A private protocol run serving users one at a time.
 */
typedef struct PprankRun PprankRun;

typedef struct PprankRunSummary {
  double unfairness;
  double mean_ndcg;
  double min_ndcg;
  size_t served;
  size_t aborts;
  uint64_t noise_draws;
} PprankRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *pprank_last_error_message(void);

/**
 * Encodes `x` as a ring element with `fractional_bits` bits of precision.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum PprankStatus pprank_encode(double x, uint32_t fractional_bits, uint64_t *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum PprankStatus pprank_decode(uint64_t raw, uint32_t fractional_bits, double *out);

/**
 * Writes the `n` normalized geometric attention weights.
 *
 * # Safety
 * `out` must be valid for `n` writes.
 */
enum PprankStatus pprank_attention_weights(size_t n, double *out);

/**
 * Per-user sensitivity of the aggregates under the geometric model.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum PprankStatus pprank_sensitivity(size_t n, double *out);

/**
 * NDCG of `reranked` relative to `original`, both position-to-item maps.
 *
 * # Safety
 * The three arrays must each hold `n` elements; `out` must be writable.
 */
enum PprankStatus pprank_ndcg(const size_t *original,
                              const size_t *reranked,
                              const double *r_hat,
                              size_t n,
                              double *out);

/**
 * L1 distance between accumulated attention and relevance.
 *
 * # Safety
 * Both arrays must hold `n` elements; `out` must be writable.
 */
enum PprankStatus pprank_unfairness(const double *attention,
                                    const double *relevance,
                                    size_t n,
                                    double *out);

/**
 * Builds the reranking problem for one user. `original` is the relevance
 * ranking (position to item). Free the result with `pprank_problem_free`.
 *
 * # Safety
 * The four arrays must each hold `n` elements; `out` must be writable.
 */
enum PprankStatus pprank_problem_new(const double *xi,
                                     const double *r_hat,
                                     const double *w_hat,
                                     const size_t *original,
                                     size_t n,
                                     double theta,
                                     size_t k,
                                     struct PprankProblem **out);

/**
 * # Safety
 * `problem` must come from `pprank_problem_new` and not be used afterwards.
 */
void pprank_problem_free(struct PprankProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle.
 */
size_t pprank_problem_size(const struct PprankProblem *problem);

/**
 * Exact solve. Writes the position-to-item order (n entries) and, if
 * `objective_out` is not NULL, its objective value.
 *
 * # Safety
 * `problem` must be a live handle and `order_out` valid for `n` writes.
 */
enum PprankStatus pprank_problem_solve(const struct PprankProblem *problem,
                                       size_t *order_out,
                                       double *objective_out);

/**
 * Enumeration reference solver; refuses instances with more than 8 items.
 *
 * # Safety
 * As for `pprank_problem_solve`.
 */
enum PprankStatus pprank_problem_brute_force(const struct PprankProblem *problem,
                                             size_t *order_out,
                                             double *objective_out);

/**
 * Starts a private run over `users` users with `n` items each, using the
 * default fixed-point precision and argmin-preserving cost scaling.
 * `noise` = 0 disables the Laplace noise (testing only).
 *
 * # Safety
 * `out` must be writable.
 */
enum PprankStatus pprank_run_new(size_t n,
                                 size_t users,
                                 double epsilon,
                                 double theta,
                                 bool noise,
                                 uint64_t seed,
                                 struct PprankRun **out);

/**
 * Serves the next user given raw scores on `[rating_min, rating_max]`.
 * Writes the chosen order (n entries) and, if non-NULL, its NDCG. A
 * failing user is recorded as aborted and the run can continue.
 *
 * # Safety
 * `run` must be a live handle, `scores` must hold `n` elements and
 * `order_out` must be valid for `n` writes.
 */
enum PprankStatus pprank_run_serve_user(struct PprankRun *run,
                                        const double *scores,
                                        size_t n,
                                        double rating_min,
                                        double rating_max,
                                        size_t *order_out,
                                        double *ndcg_out);

/**
 * Ends the run, frees the handle and writes the evaluation summary. The
 * handle is released even when an error is returned.
 *
 * # Safety
 * `run` must come from `pprank_run_new` and not be used afterwards;
 * `out` must be writable.
 */
enum PprankStatus pprank_run_finish(struct PprankRun *run, struct PprankRunSummary *out);

/**
 * Releases a run without summarizing it.
 *
 * # Safety
 * `run` must come from `pprank_run_new` and not be used afterwards.
 */
void pprank_run_free(struct PprankRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPRANK_H */
