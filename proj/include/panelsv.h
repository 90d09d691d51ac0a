/* panelsv: panel data factor stochastic volatility estimation.
 *
 * C API over the C++ core. Every object is an opaque handle owned by the
 * library; every call returns a status code and leaves a human-readable
 * message for the last failure in thread-local storage (psv_last_error).
 * Handles are freed with the matching *_free function; NULL is accepted.
 */
#ifndef PANELSV_H
#define PANELSV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psv_status {
  PSV_OK = 0,
  PSV_ERR_INVALID_ARGUMENT = 1,
  PSV_ERR_PARSE = 2,
  PSV_ERR_DIMENSION = 3,
  PSV_ERR_NUMERIC = 4,
  PSV_ERR_IO = 5,
  PSV_ERR_UNKNOWN_SCENARIO = 6,
  PSV_ERR_INTERNAL = 7
} psv_status;

typedef struct psv_panel psv_panel;  /* dataset: returns + covariates      */
typedef struct psv_sim psv_sim;      /* simulated dataset + ground truth   */
typedef struct psv_fit psv_fit;      /* estimation result (chain + summary) */

const char* psv_version(void);
/* Message describing the most recent failure on this thread; never NULL. */
const char* psv_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* Long-format CSV with header individual_id,period,return,x1..xk.
 * declared_k < 0 accepts the file's covariate count. */
psv_status psv_panel_load_csv(const char* path, int declared_k,
                              psv_panel** out);
psv_status psv_panel_write_csv(const psv_panel* panel, const char* path);
psv_status psv_panel_dims(const psv_panel* panel, int* n_individuals,
                          int* n_periods, int* n_covariates);
/* Pooled mean-0 / sd-1 standardization of covariate columns. */
psv_status psv_panel_standardize(const psv_panel* panel, int skip_first_column,
                                 psv_panel** out);
void psv_panel_free(psv_panel* panel);

/* ---- simulation -------------------------------------------------------- */

/* scenario is one of "M1".."M8". */
psv_status psv_simulate_scenario(const char* scenario, uint64_t seed,
                                 psv_sim** out);
const psv_panel* psv_sim_panel(const psv_sim* sim);
/* Writes dataset.csv, ground_truth.json and manifest.json into dir. */
psv_status psv_sim_write(const psv_sim* sim, const char* dir);
void psv_sim_free(psv_sim* sim);

/* ---- factor count selection ------------------------------------------- */

psv_status psv_select_num_factors(const psv_panel* panel, int p_max,
                                  int* n_factors);

/* ---- estimation --------------------------------------------------------
 *
 * priors_path / chain_path are JSON files (NULL uses the documented
 * defaults). no_intercept = 0 requires the first covariate column to be a
 * constant intercept column; no_intercept = 1 fits the model without a
 * constant term. */
psv_status psv_estimate(const psv_panel* panel, int n_factors,
                        const char* priors_path, const char* chain_path,
                        int no_intercept, psv_fit** out);
/* Writes draws.csv, summary.csv, summary.json, manifest.json,
 * chain_info.json and latent-path means into dir. */
psv_status psv_fit_write(const psv_fit* fit, const char* dir);
/* Summary table as CSV text; free with psv_string_free. */
psv_status psv_fit_summary_csv(const psv_fit* fit, char** csv_text);
void psv_fit_free(psv_fit* fit);

/* Rebuild the coefficient summary from a previously written chain
 * directory (draws.csv + manifest.json). */
psv_status psv_summarize_dir(const char* dir, char** csv_text);

void psv_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* PANELSV_H */
