#ifndef LCR_H
#define LCR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum LcrStatus {
  LCR_STATUS_OK = 0,
  LCR_STATUS_NULL_POINTER = 1,
  LCR_STATUS_DOMAIN = 2,
  LCR_STATUS_PARSE = 3,
  LCR_STATUS_CAPACITY = 4,
  LCR_STATUS_IO = 5,
  LCR_STATUS_INVALID_UTF8 = 6,
  LCR_STATUS_PANIC = 7,
} LcrStatus;

/*
 Which path sums enter the plug-in variance.
 */
typedef enum LcrVarianceForm {
  LCR_VARIANCE_FORM_COMPLETE = 0,
  LCR_VARIANCE_FORM_SPARSE_LIMIT = 1,
} LcrVarianceForm;

/*
 A directed graph. Opaque to C.
 */
typedef struct LcrGraph LcrGraph;

/*
 Counts and log-ratio estimate.
 */
typedef struct LcrEstimate {
  uint64_t qa;
  uint64_t qb;
  /*
   Unclamped log ratio; NaN unless both counts are positive.
   */
  double rho_hat;
  /*
   Clamped or saturated estimate; NaN when both counts vanish.
   */
  double rho_star;
  double threshold;
} LcrEstimate;

/*
 Estimate, standard error and the two tests of `rho = rho0`.
 */
typedef struct LcrTestResult {
  struct LcrEstimate estimate;
  /*
   Plug-in variance of the centered count difference.
   */
  double v_hat;
  /*
   Standard error of `rho_star`, the inverse signal-to-noise ratio.
   */
  double sigma_hat;
  double psi_star;
  double p_value_psi;
  double phi_star;
  double p_value_phi;
  /*
   1 reject, 0 retain, -1 undecided.
   */
  int32_t reject_psi;
  int32_t reject_phi;
  double ci_low;
  double ci_high;
  /*
   0 ok, 1 no estimate, 2 zero variance.
   */
  int32_t test_status;
} LcrTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call into the library from the same thread.
 */
const char *lcr_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *lcr_version(void);

/*
 Builds a graph on `n` nodes from `len` directed edges
 `sources[k] -> targets[k]`. Self-loops and duplicates are dropped.

 # Safety
 `sources` and `targets` must point to `len` readable values (or be NULL
 when `len` is 0); `out` must be writable.
 */
enum LcrStatus lcr_graph_from_edges(uintptr_t n,
                                    const uint32_t *sources,
                                    const uint32_t *targets,
                                    uintptr_t len,
                                    struct LcrGraph **out);

/*
 Reads a tab-separated edge list. `n` of 0 means "infer from the file".

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LcrStatus lcr_graph_from_file(const char *path, uintptr_t n, struct LcrGraph **out);

/*
 Samples a graph; `heterogeneous` != 0 draws node effects from `seed`.

 # Safety
 `out` must be writable.
 */
enum LcrStatus lcr_graph_sample(uintptr_t n,
                                double rho,
                                double gamma,
                                int32_t heterogeneous,
                                uint64_t seed,
                                struct LcrGraph **out);

/*
 Releases a graph. NULL is ignored.

 # Safety
 `g` must come from a constructor of this library and not be used again.
 */
void lcr_graph_free(struct LcrGraph *g);

/*
 Node count, or 0 for NULL.

 # Safety
 `g` must be NULL or a live handle.
 */
uintptr_t lcr_graph_node_count(const struct LcrGraph *g);

/*
 Directed edge count, or 0 for NULL.

 # Safety
 `g` must be NULL or a live handle.
 */
uintptr_t lcr_graph_edge_count(const struct LcrGraph *g);

/*
 Counts both patterns of quadrilateral pair `pair_id` (1 to 3).

 # Safety
 `g` must be a live handle; `qa` and `qb` must be writable.
 */
enum LcrStatus lcr_count_pair(const struct LcrGraph *g,
                              uint32_t pair_id,
                              uint64_t *qa,
                              uint64_t *qb);

/*
 Log-ratio estimate for pair `pair_id`.

 # Safety
 `g` must be a live handle; `out` must be writable.
 */
enum LcrStatus lcr_estimate(const struct LcrGraph *g, uint32_t pair_id, struct LcrEstimate *out);

/*
 Estimate, plug-in variance and tests of `rho = rho0` at `level`.

 # Safety
 `g` must be a live handle; `out` must be writable.
 */
enum LcrStatus lcr_test(const struct LcrGraph *g,
                        uint32_t pair_id,
                        double rho0,
                        double level,
                        enum LcrVarianceForm form,
                        struct LcrTestResult *out);

/*
 The full result document as JSON, in the same format as the command
 line tool. Free the string with [`lcr_string_free`].

 # Safety
 `g` must be a live handle; `out` must be writable.
 */
enum LcrStatus lcr_test_json(const struct LcrGraph *g,
                             uint32_t pair_id,
                             double rho0,
                             double level,
                             enum LcrVarianceForm form,
                             char **out);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not be used again.
 */
void lcr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCR_H */
