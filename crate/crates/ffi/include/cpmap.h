#ifndef CPMAP_H
#define CPMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpmStatus {
  CPM_STATUS_OK = 0,
  CPM_STATUS_NULL_POINTER = 1,
  CPM_STATUS_INVALID_INPUT = 2,
  CPM_STATUS_PARSE = 3,
  CPM_STATUS_NUMERICAL = 4,
  CPM_STATUS_PANIC = 5,
} CpmStatus;

typedef enum CpmMethod {
  CPM_METHOD_AUTO = 0,
  CPM_METHOD_EXP = 1,
  CPM_METHOD_BARRIER = 2,
} CpmMethod;

/**
 * Outcome classification of a solve.
 */
typedef enum CpmVerdict {
  CPM_VERDICT_FEASIBLE = 0,
  CPM_VERDICT_CERTIFIED_INFEASIBLE = 1,
  CPM_VERDICT_CERTIFIED_NO_STRICT = 2,
  CPM_VERDICT_UNDETERMINED = 3,
} CpmVerdict;

/**
 * Interpolation data under construction.
 */
typedef struct CpmInstance CpmInstance;

typedef struct CpmReport CpmReport;

typedef struct CpmSolveOptions {
  enum CpmMethod method;
  double tol;
  uint64_t max_iters;
  uint64_t seed;
  bool parallel;
} CpmSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fills `out` with the library defaults.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `CpmSolveOptions`.
 */
enum CpmStatus cpm_solve_options_default(struct CpmSolveOptions *out);

/**
 * Creates an empty instance for maps `M_n → M_k`.
 *
 * # Safety
 * `out` must point to writable memory for one pointer.
 */
enum CpmStatus cpm_instance_new(size_t n,
                                size_t k,
                                bool trace_preserving,
                                struct CpmInstance **out);

/**
 * Appends the pair `(A, B)`; `a` holds `2·n·n` doubles and `b` holds `2·k·k`.
 *
 * # Safety
 * `inst` must come from this library; `a` and `b` must point to arrays of
 * the stated lengths.
 */
enum CpmStatus cpm_instance_add_pair(struct CpmInstance *inst, const double *a, const double *b);

/**
 * Parses an instance document (the same JSON the command-line tool reads).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must point to writable memory for one pointer.
 */
enum CpmStatus cpm_instance_from_json(const char *json, struct CpmInstance **out);

/**
 * # Safety
 * `inst` must be null or come from this library, and not be used afterwards.
 */
void cpm_instance_free(struct CpmInstance *inst);

/**
 * Runs the full solve. `options` may be null for defaults.
 *
 * A report is produced for every verdict, including infeasible ones; the
 * return value only signals errors.
 *
 * # Safety
 * `inst` must come from this library; `options` must be null or valid;
 * `out` must point to writable memory for one pointer.
 */
enum CpmStatus cpm_solve(const struct CpmInstance *inst,
                         const struct CpmSolveOptions *options,
                         struct CpmReport **out);

/**
 * # Safety
 * `report` must come from [`cpm_solve`].
 */
enum CpmStatus cpm_report_verdict(const struct CpmReport *report, enum CpmVerdict *out);

/**
 * The command-line exit code for this report (0, 2 or 3); −1 for a null report.
 *
 * # Safety
 * `report` must be null or come from [`cpm_solve`].
 */
int32_t cpm_report_exit_code(const struct CpmReport *report);

/**
 * # Safety
 * `report` must come from [`cpm_solve`]; `n` and `k` must be writable.
 */
enum CpmStatus cpm_report_dims(const struct CpmReport *report, size_t *n, size_t *k);

/**
 * Copies the `nk × nk` Choi matrix into `out` (`len ≥ 2·(nk)²` doubles).
 *
 * Fails with `InvalidInput` when the report carries no solution.
 *
 * # Safety
 * `report` must come from [`cpm_solve`]; `out` must hold `len` doubles.
 */
enum CpmStatus cpm_report_choi(const struct CpmReport *report, double *out, size_t len);

/**
 * Number of Kraus operators; 0 when there is no solution or `report` is null.
 *
 * # Safety
 * `report` must be null or come from [`cpm_solve`].
 */
size_t cpm_report_kraus_count(const struct CpmReport *report);

/**
 * Copies Kraus operator `index` (an `n × k` matrix `V` with `φ(A) = Σ V* A V`).
 *
 * # Safety
 * `report` must come from [`cpm_solve`]; `out` must hold `len` doubles.
 */
enum CpmStatus cpm_report_kraus(const struct CpmReport *report,
                                size_t index,
                                double *out,
                                size_t len);

/**
 * Largest absolute constraint residual, NaN when unavailable.
 *
 * # Safety
 * `report` must be null or come from [`cpm_solve`].
 */
double cpm_report_max_residual(const struct CpmReport *report);

/**
 * Smallest eigenvalue of the Choi matrix, NaN when unavailable.
 *
 * # Safety
 * `report` must be null or come from [`cpm_solve`].
 */
double cpm_report_min_eigenvalue(const struct CpmReport *report);

/**
 * Applies the solved map to an `n × n` matrix `a`, writing the `k × k` result.
 *
 * # Safety
 * `report` must come from [`cpm_solve`]; `a` must hold `2·n·n` doubles and
 * `out` must hold `len` doubles.
 */
enum CpmStatus cpm_report_apply(const struct CpmReport *report,
                                const double *a,
                                double *out,
                                size_t len);

/**
 * Serializes the report as JSON; release the string with [`cpm_string_free`].
 *
 * # Safety
 * `report` must come from [`cpm_solve`]; `out` must point to writable memory for one pointer.
 */
enum CpmStatus cpm_report_to_json(const struct CpmReport *report, char **out);

/**
 * # Safety
 * `s` must be null or come from [`cpm_report_to_json`], and not be used afterwards.
 */
void cpm_string_free(char *s);

/**
 * # Safety
 * `report` must be null or come from [`cpm_solve`], and not be used afterwards.
 */
void cpm_report_free(struct CpmReport *report);

/**
 * Message for the most recent failure on this thread (empty after a success).
 *
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *cpm_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPMAP_H */
