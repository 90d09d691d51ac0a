#pragma once

#include <map>
#include <string>
#include <vector>

#include "panelsv/types.hpp"

namespace panelsv {

// Full sampler state carried between sweeps: the model parameters plus the
// hierarchy variables that live outside ParameterState.
struct ChainState {
  ParameterState param;
  VectorXd mu_beta;       // k
  MatrixXd v_beta_inv;    // k x k
  double sigma_lambda = 1.0;
  VectorXd phi_hat;       // proposal location for the next phi move (N+p)
  VectorXd phi_var;       // proposal scale diagonal (N+p)
  std::string rng_state;  // serialized engine (checkpoints only)
  int next_sweep = 0;
};

struct ChainOutput {
  std::vector<std::string> trace_names;
  MatrixXd traces;  // n_retained x n_traces
  // Per-move acceptance rates (phi move, loading refresh).
  std::map<std::string, double> acceptance_rates;
  int n_retained = 0;
  int n_validation_failures = 0;  // retained snapshots violating invariants
  std::string config_hash;
  // Posterior means of the latent paths over retained sweeps.
  MatrixXd h_mean, q_mean, f_mean;
  // Coarse latent-path snapshots (every path_thin-th retained sweep).
  std::vector<MatrixXd> h_snapshots, q_snapshots, f_snapshots;
  // Layout needed to rebuild the coefficient table.
  int n_individuals = 0, n_covariates = 0, n_factors = 0;
  bool has_intercept = true;

  int trace_index(const std::string& name) const;
};

// Posterior-mean initial state (OLS coefficients, principal-component
// factors, smoothed log squared residuals).
ChainState initial_state(const PanelDataset& dataset, int n_factors,
                         const PriorConfig& priors);

ChainOutput run_chain(const PanelDataset& dataset, int n_factors,
                      const PriorConfig& priors, const ChainConfig& config,
                      bool has_intercept = true);

// Table-2 style coefficient summary: posterior mean, sd and t = mean/sd per
// individual and covariate; sd == 0 flags t as infinite.
struct SummaryTable {
  std::vector<std::string> row_labels;     // per covariate: const / var1 / ...
  std::vector<std::string> column_labels;  // individual ids or ind1..indN
  MatrixXd mean;  // k x N
  MatrixXd sd;    // k x N
  MatrixXd t;     // k x N (may contain +/-inf)
};

SummaryTable summarize(const ChainOutput& output,
                       const std::vector<std::string>& individual_ids = {});

struct Diagnostics {
  std::vector<std::string> trace_names;
  MatrixXd acf;            // n_traces x lags, NaN rows for degenerate traces
  std::vector<bool> degenerate;
  MatrixXd running_mean;   // n_retained x n_traces
};

Diagnostics diagnostics(const ChainOutput& output, int lags);

// ACF of a single series at lags 1..lags (degenerate series flagged by the
// caller through the variance check).
VectorXd autocorrelation(const VectorXd& series, int lags);

}  // namespace panelsv
