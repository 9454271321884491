#ifndef TREPAC_H
#define TREPAC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TrepacStatus {
  TREPAC_STATUS_OK = 0,
  TREPAC_STATUS_NULL_POINTER = 1,
  /**
   * Bad parameters, unknown names or unsupported requests.
   */
  TREPAC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed or structurally invalid tree documents.
   */
  TREPAC_STATUS_PARSE = 3,
  /**
   * The oracle could not label an example.
   */
  TREPAC_STATUS_ORACLE = 4,
  TREPAC_STATUS_IO = 5,
  TREPAC_STATUS_PANIC = 6,
} TrepacStatus;

typedef enum TrepacRounding {
  TREPAC_ROUNDING_NEAREST = 0,
  TREPAC_ROUNDING_CEIL = 1,
} TrepacRounding;

typedef enum TrepacTermination {
  TREPAC_TERMINATION_QUEUE_EMPTY = 0,
  TREPAC_TERMINATION_SIZE_LIMIT = 1,
  TREPAC_TERMINATION_ERROR_BUDGET_MET = 2,
} TrepacTermination;

/**
 * Opaque membership oracle together with the feature space it labels.
 */
typedef struct TrepacOracle TrepacOracle;

/**
 * Opaque result of an extraction.
 */
typedef struct TrepacReport TrepacReport;

/**
 * Opaque decision tree with its metadata.
 */
typedef struct TrepacTree TrepacTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Borrowed; valid
 * until the next trepac call on this thread.
 */
const char *trepac_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or come from a trepac function that returns an owned string.
 */
void trepac_string_free(char *s);

/**
 * Training-set size for `n` internal nodes over `num_features` binary features.
 *
 * # Safety
 * `out` must be NULL or point to writable memory.
 */
enum TrepacStatus trepac_sample_size(double epsilon,
                                     double delta,
                                     uint64_t k,
                                     uint64_t n,
                                     uint32_t num_features,
                                     enum TrepacRounding rounding,
                                     uint64_t *out);

/**
 * Number of internal nodes suggested for constant `c` and accuracy `epsilon`.
 *
 * # Safety
 * `out` must be NULL or point to writable memory.
 */
enum TrepacStatus trepac_tree_size_estimate(double c, double epsilon, uint64_t *out);

/**
 * Parses a tree document.
 *
 * # Safety
 * `json` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_tree_from_json(const char *json, struct TrepacTree **out);

/**
 * Serializes a tree document. Free the result with [`trepac_string_free`].
 *
 * # Safety
 * `tree` must be NULL or a live handle; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_tree_to_json(const struct TrepacTree *tree, char **out);

/**
 * Number of internal nodes.
 *
 * # Safety
 * `tree` must be NULL or a live handle; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_tree_size(const struct TrepacTree *tree, size_t *out);

/**
 * Classifies an example given as `len` integer feature values.
 *
 * # Safety
 * `values` must point to `len` readable integers (or be NULL when `len` is 0).
 */
enum TrepacStatus trepac_tree_classify(const struct TrepacTree *tree,
                                       const int64_t *values,
                                       size_t len,
                                       uint8_t *out);

/**
 * # Safety
 * `tree` must be NULL or a handle not yet freed.
 */
void trepac_tree_free(struct TrepacTree *tree);

/**
 * Oracle backed by one of the bundled occupation fixtures.
 *
 * # Safety
 * `name` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_oracle_builtin(const char *name, struct TrepacOracle **out);

/**
 * Oracle that answers with a tree over the occupation feature space. The
 * tree is copied; the caller keeps ownership of `tree`.
 *
 * # Safety
 * `tree` must be NULL or a live handle; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_oracle_from_tree(const struct TrepacTree *tree, struct TrepacOracle **out);

/**
 * # Safety
 * `oracle` must be NULL or a handle not yet freed.
 */
void trepac_oracle_free(struct TrepacOracle *oracle);

/**
 * Extracts a tree with at most `size_limit` internal nodes from `m` samples
 * drawn uniformly over the oracle's feature space.
 *
 * # Safety
 * `oracle` must be NULL or a live handle; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_extract(const struct TrepacOracle *oracle,
                                 size_t size_limit,
                                 uint64_t k,
                                 size_t m,
                                 uint64_t seed,
                                 struct TrepacReport **out);

/**
 * Copies the extracted tree into a new handle.
 *
 * # Safety
 * `report` must be NULL or a live handle; `out` must be NULL or writable.
 */
enum TrepacStatus trepac_report_tree(const struct TrepacReport *report, struct TrepacTree **out);

/**
 * Training misclassifications and training-set size.
 *
 * # Safety
 * `report` must be NULL or a live handle; outputs must be NULL or writable.
 */
enum TrepacStatus trepac_report_training(const struct TrepacReport *report,
                                         size_t *misclassified,
                                         size_t *training_size);

/**
 * Why the loop stopped, and whether the queue was empty at that point.
 *
 * # Safety
 * `report` must be NULL or a live handle; outputs must be NULL or writable.
 */
enum TrepacStatus trepac_report_termination(const struct TrepacReport *report,
                                            enum TrepacTermination *reason,
                                            bool *queue_exhausted);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void trepac_report_free(struct TrepacReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREPAC_H */
