#ifndef DYNARES_H
#define DYNARES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DynaresStatus {
  DYNARES_STATUS_OK = 0,
  DYNARES_STATUS_NULL_POINTER = 1,
  DYNARES_STATUS_INVALID_INPUT = 2,
  DYNARES_STATUS_IO = 3,
  DYNARES_STATUS_PARSE = 4,
  DYNARES_STATUS_EMPTY_EDGE_SET = 5,
  DYNARES_STATUS_EMPTY_COVER = 6,
  // Training diverged or produced a non-finite value.
  DYNARES_STATUS_NUMERICAL = 7,
  DYNARES_STATUS_BUFFER_TOO_SMALL = 8,
  DYNARES_STATUS_PANIC = 9,
} DynaresStatus;

// An undirected simple graph.
typedef struct DynaresGraph DynaresGraph;

// The outcome of one training run.
typedef struct DynaresRun DynaresRun;

typedef struct DynaresTrainOptions {
  size_t depth;
  size_t width;
  size_t k;
  size_t max_epochs;
  size_t patience;
  double lr;
  double weight_decay;
  uint64_t seed;
  // Exact balanced loss instead of the sampled estimate.
  bool balanced_loss;
  size_t edge_batch;
  size_t nonedge_batch;
  bool batch_norm;
  bool resample_per_epoch;
  // Optimize F directly; depth, width and batch_norm are ignored.
  bool free_variable;
} DynaresTrainOptions;

typedef struct DynaresMetrics {
  double conductance;
  double coverage;
  double density;
  double clustering_coefficient;
  // Valid only when `has_nmi` is set.
  double nmi;
  bool has_nmi;
} DynaresMetrics;

typedef struct DynaresTTest {
  double t;
  size_t df;
  double critical;
  bool significant;
} DynaresTTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dynares_version(void);

// Message for the last failed call on this thread, or "" after a success.
// The pointer stays valid until the next library call on this thread.
const char *dynares_last_error(void);

// Builds a graph on nodes `0..n` from `m` pairs stored as
// `edges[2i], edges[2i + 1]`. Self-loops are dropped, duplicates collapsed.
//
// # Safety
// `edges` must point to `2 * m` readable values and `out` must be writable.
enum DynaresStatus dynares_graph_from_edges(size_t n,
                                            const size_t *edges,
                                            size_t m,
                                            struct DynaresGraph **out);

// Loads a whitespace-separated edge list. Node ids are numbered in order
// of first appearance.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
enum DynaresStatus dynares_graph_load(const char *path, struct DynaresGraph **out);

// # Safety
// `graph` must be null or a live handle.
size_t dynares_graph_num_nodes(const struct DynaresGraph *graph);

// # Safety
// `graph` must be null or a live handle.
size_t dynares_graph_num_edges(const struct DynaresGraph *graph);

// # Safety
// `graph` must be null or a handle not yet freed.
void dynares_graph_free(struct DynaresGraph *graph);

// Library defaults for `k` communities.
struct DynaresTrainOptions dynares_train_options_default(size_t k);

// Trains on `graph` with identity node features.
//
// # Safety
// `graph` and `options` must be live, `out` writable.
enum DynaresStatus dynares_train(const struct DynaresGraph *graph,
                                 const struct DynaresTrainOptions *options,
                                 struct DynaresRun **out);

// Writes the affiliation matrix dimensions.
//
// # Safety
// `run` must be live; `n` and `k` writable.
enum DynaresStatus dynares_run_shape(const struct DynaresRun *run, size_t *n, size_t *k);

// Copies F, row-major, into `out` which holds `len >= n * k` doubles.
//
// # Safety
// `run` must be live and `out` must hold `len` writable doubles.
enum DynaresStatus dynares_run_affiliations(const struct DynaresRun *run, double *out, size_t len);

// Best loss reached, and the number of epochs run.
//
// # Safety
// `run` must be live; `best_loss` and `epochs` writable.
enum DynaresStatus dynares_run_loss(const struct DynaresRun *run,
                                    double *best_loss,
                                    size_t *epochs);

// Thresholds the run's F at `threshold` and scores the cover on `graph`.
// When `truth` is non-null it is an `n × truth_k` row-major 0/1 membership
// matrix and NMI is reported.
//
// # Safety
// `run` and `graph` must be live, `truth` null or holding `n * truth_k`
// bytes, `out` writable.
enum DynaresStatus dynares_run_metrics(const struct DynaresRun *run,
                                       const struct DynaresGraph *graph,
                                       double threshold,
                                       const uint8_t *truth,
                                       size_t truth_k,
                                       struct DynaresMetrics *out);

// Overlapping NMI of two covers over `n` nodes, each given as a row-major
// 0/1 membership matrix (`n × ka` and `n × kb`).
//
// # Safety
// `a` must hold `n * ka` bytes, `b` `n * kb` bytes, `out` writable.
enum DynaresStatus dynares_nmi(size_t n,
                               const uint8_t *a,
                               size_t ka,
                               const uint8_t *b,
                               size_t kb,
                               double *out);

// Two-sample t-test from `(mean, se, n)` summaries at α = 0.05.
//
// # Safety
// `out` must be writable.
enum DynaresStatus dynares_t_test(double mean1,
                                  double se1,
                                  size_t n1,
                                  double mean2,
                                  double se2,
                                  size_t n2,
                                  struct DynaresTTest *out);

// # Safety
// `run` must be null or a handle not yet freed.
void dynares_run_free(struct DynaresRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNARES_H */
