/*
 * C interface to the cvgp engine: opaque handles, integer status codes,
 * strings owned by the library and released with cvgp_string_free.
 *
 * Every function returning cvgp_status yields CVGP_OK (0) on success; on
 * failure the per-thread message from cvgp_last_error() describes the cause.
 */
#ifndef CVGP_CAPI_H
#define CVGP_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int cvgp_status;
#define CVGP_OK 0
#define CVGP_ERROR_INVALID 1 /* bad arguments or configuration */
#define CVGP_ERROR_PARSE 2   /* malformed expression or JSON */
#define CVGP_ERROR_RUNTIME 3 /* failure while executing a request */

const char* cvgp_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* cvgp_last_error(void);

void cvgp_string_free(char* s);

/* -- expressions (canonical prefix text format) -------------------------- */

typedef struct cvgp_expr cvgp_expr;

cvgp_status cvgp_expr_parse(const char* text, cvgp_expr** out);
cvgp_status cvgp_expr_serialize(const cvgp_expr* expr, char** out_text);
cvgp_status cvgp_expr_evaluate(const cvgp_expr* expr, const double* point,
                               size_t point_len, double* out_value);
int cvgp_expr_node_count(const cvgp_expr* expr);
int cvgp_expr_depth(const cvgp_expr* expr);
cvgp_expr* cvgp_expr_clone(const cvgp_expr* expr);
void cvgp_expr_free(cvgp_expr* expr);

/* -- search runs ---------------------------------------------------------- */

/*
 * Executes one engine run described by a JSON configuration (see the
 * README for the schema) and returns the result document as JSON:
 * stage reports, hall of fame with held-out metrics and recovery flags.
 */
cvgp_status cvgp_run_search(const char* config_json, char** out_result_json);

/* -- benchmark generation -------------------------------------------------- */

/* JSON config {operators,a,b,c,sigma,count,base_seed}; returns JSON lines. */
cvgp_status cvgp_bench_generate(const char* config_json, char** out_manifest_jsonl);

/* -- metrics ---------------------------------------------------------------- */

typedef struct cvgp_metrics {
  double mse;
  double neg_mse;
  double nmse;
  double rmse;
  double nrmse;
  double inv_nrmse;
  double sigma_y;
  int n;
} cvgp_metrics;

cvgp_status cvgp_metrics_compute(const double* pred, const double* y, size_t n,
                                 cvgp_metrics* out);

/* Five-number summary {min, q25, q50, q75, max} of values. */
cvgp_status cvgp_quantiles(const double* values, size_t n, double out[5]);

/* Ground-truth recovery check between two expression texts. */
cvgp_status cvgp_recovered(const char* candidate_text, const char* truth_text,
                           uint64_t seed, int* out_flag);

/* -- report aggregation ------------------------------------------------------ */

/*
 * summaries_jsonl: one JSON summary object per line, as written by the CLI
 * run command. Produces the NMSE quantile table and the recovery table.
 */
cvgp_status cvgp_report_build(const char* summaries_jsonl, char** out_quantiles_csv,
                              char** out_recovery_csv);

/* -- search-space counting ---------------------------------------------------- */

/*
 * Exact A(l) and S(l) for trees of l nodes over m variables and o binary
 * operators, returned as decimal strings.
 */
cvgp_status cvgp_space_count(int l, int m, int o, char** out_a_dec, char** out_s_dec);

#ifdef __cplusplus
}
#endif

#endif /* CVGP_CAPI_H */
