#ifndef PARTREE_H
#define PARTREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum PtStatus {
  PT_STATUS_OK = 0,
  // A required pointer was null or a buffer was too small.
  PT_STATUS_NULL_ARGUMENT = 1,
  PT_STATUS_VALIDATION = 2,
  PT_STATUS_IO = 3,
  PT_STATUS_INVARIANT = 4,
  PT_STATUS_PANIC = 5,
} PtStatus;

// Tree kinds accepted by [`pt_tree_build`].
typedef enum PtTreeKind {
  PT_TREE_KIND_RP = 0,
  PT_TREE_KIND_SPILL = 1,
  PT_TREE_KIND_VIRTUAL_SPILL = 2,
} PtTreeKind;

// Opaque dataset handle.
typedef struct PtDataset PtDataset;

// Opaque tree handle.
typedef struct PtTree PtTree;

typedef struct PtTreeStats {
  size_t depth;
  size_t leaf_count;
  size_t stored_indices;
  size_t max_leaf_size;
} PtTreeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pt_version(void);

// Message for the last failed call on this thread, or null if it
// succeeded. Valid until the next `pt_*` call on the same thread.
const char *pt_last_error_message(void);

// Copies an `n × d` row-major matrix into a new dataset.
//
// # Safety
// `values` must point to `n * d` doubles; `out` must be writable.
enum PtStatus pt_dataset_new(const double *values, size_t n, size_t d, struct PtDataset **out);

// Loads a dataset file (`.csv` as CSV, anything else as binary).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum PtStatus pt_dataset_load(const char *path, struct PtDataset **out);

// Number of points, or 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t pt_dataset_len(const struct PtDataset *data);

// Dimension, or 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t pt_dataset_dim(const struct PtDataset *data);

// # Safety
// `data` must be null or a handle not yet freed.
void pt_dataset_free(struct PtDataset *data);

// Builds a tree; `kind` is a [`PtTreeKind`] value and `alpha` is ignored
// for RP trees.
//
// # Safety
// `data` must be a live handle; `out` must be writable.
enum PtStatus pt_tree_build(const struct PtDataset *data,
                            uint32_t kind,
                            size_t n_o,
                            double alpha,
                            uint64_t seed,
                            struct PtTree **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum PtStatus pt_tree_load(const char *path, struct PtTree **out);

// # Safety
// `tree` must be a live handle; `path` a NUL-terminated string.
enum PtStatus pt_tree_save(const struct PtTree *tree, const char *path);

// # Safety
// `tree` must be a live handle; `out` must be writable.
enum PtStatus pt_tree_stats(const struct PtTree *tree, struct PtTreeStats *out);

// # Safety
// `tree` must be null or a handle not yet freed.
void pt_tree_free(struct PtTree *tree);

// Defeatist `k`-NN query. Writes up to `k` neighbors (nearest first) and
// their count; fewer than `k` means the reached leaves held fewer points.
//
// # Safety
// `tree` and `data` must be live handles, `data` the dataset the tree was
// built on; `q` must hold `dim` doubles; `out_indices` and `out_distances`
// must hold `k` elements each.
enum PtStatus pt_tree_query(const struct PtTree *tree,
                            const struct PtDataset *data,
                            const double *q,
                            size_t dim,
                            size_t k,
                            size_t *out_indices,
                            double *out_distances,
                            size_t *out_count);

// Exact `k`-NN by a full scan. Buffers as for [`pt_tree_query`].
//
// # Safety
// As for [`pt_tree_query`], without the tree.
enum PtStatus pt_brute_force_knn(const struct PtDataset *data,
                                 const double *q,
                                 size_t dim,
                                 size_t k,
                                 size_t *out_indices,
                                 double *out_distances,
                                 size_t *out_count);

// `Φ_{k,m}` of query `q` against the dataset.
//
// # Safety
// `data` must be a live handle, `q` must hold `dim` doubles and `out`
// must be writable.
enum PtStatus pt_phi(const struct PtDataset *data,
                     const double *q,
                     size_t dim,
                     size_t k,
                     size_t m,
                     double *out);

// Probability that a random direction projects `y` strictly between `q`
// and `x`. Requires `|q - x| <= |q - y|`.
//
// # Safety
// `q`, `x` and `y` must each hold `dim` doubles; `out` must be writable.
enum PtStatus pt_three_point_probability(const double *q,
                                         const double *x,
                                         const double *y,
                                         size_t dim,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARTREE_H */
