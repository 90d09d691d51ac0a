#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace panelsv {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

// The four dimension counts driving every array shape: N individuals,
// T periods, k covariates (including the intercept column when present),
// p common factors.
struct ModelDims {
  int n_individuals = 0;  // N
  int n_periods = 0;      // T
  int n_covariates = 0;   // k
  int n_factors = 0;      // p

  // Throws on violation: N,T,k >= 1, T >= 2, 0 <= p < N.
  void validate() const;
};

struct PanelDataset {
  MatrixXd returns;                       // N x T
  std::vector<MatrixXd> covariates;       // N entries, each T x k
  std::vector<std::int64_t> period_index; // strictly increasing, gap-free
  std::vector<std::string> individual_ids;

  int n_individuals() const { return static_cast<int>(returns.rows()); }
  int n_periods() const { return static_cast<int>(returns.cols()); }
  int n_covariates() const {
    return covariates.empty() ? 0 : static_cast<int>(covariates[0].cols());
  }
  ModelDims dims(int n_factors) const {
    return {n_individuals(), n_periods(), n_covariates(), n_factors};
  }

  // No missing cells (shape consistency), finite values, strictly
  // increasing gap-free period labels.
  void validate() const;
  std::uint64_t digest() const;
};

struct RegressionCoeffs {
  MatrixXd beta;  // N x k, row i = beta_i'
};

struct LoadingMatrix {
  MatrixXd lambda;  // N x p; leading p x p block lower triangular, positive diagonal
};

struct FactorPath {
  MatrixXd f;  // p x T, column t = f_t
};

struct LogVolPaths {
  MatrixXd h;  // N x T idiosyncratic log volatility
  MatrixXd q;  // p x T factor log volatility
};

struct VolCoeffs {
  VectorXd alpha0;    // N
  VectorXd alpha1;    // N, |alpha1| < 1
  VectorXd phi0;      // p
  VectorXd phi1;      // p, |phi1| < 1
  VectorXd sigma2_v;  // N innovation variances of h
  VectorXd sigma2_w;  // p innovation variances of q
};

struct ScaleParams {
  VectorXd sigma2_err;  // N, sigma_i^2 of the working error model
  VectorXd vartheta;    // N, scale parameters
  double delta_sigma = 1.0;
  VectorXd phi_acf;     // autocorrelation parameter vector of the working model
};

struct ParameterState {
  RegressionCoeffs coeffs;
  LoadingMatrix loadings;
  FactorPath factors;
  LogVolPaths logvols;
  VolCoeffs volcoeffs;
  ScaleParams scales;
  MatrixXi mixture_indicators;  // (N+p) x T, entries in 1..7
};

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

// Scalar prior specification as read from config files; vector/matrix
// hyperparameters are broadcast to the data dimensions when the chain starts.
struct RegressionPrior {
  double mu_beta_prior_mean = 0.02;  // each coordinate of the mu_beta prior mean
  double mu_beta_prior_cov = 0.04;   // diagonal of its covariance
  double wishart_dof = 0.0;          // 0 => k + 2
  double wishart_scale = 0.0;        // diagonal of the Wishart scale; 0 => 2/dof
  double nu_sigma = 5.0;
  double delta_sigma0 = 1.0;
  double nu_sigma0 = 2.0;
  double nu_vartheta = 10.0;
  double t_proposal_dof = 10.0;  // must be > 1

  void validate() const;
};

struct LoadingPrior {
  double c_prior_var = 100.0;  // prior variance of each free loading
  double nu_lambda = 5.0;
  double delta_lambda = 1.0;
  double s2_lambda = 0.25;
  double t_dof = 10.0;  // proposal degrees of freedom for the M-H refresh

  void validate() const;
};

struct VolatilityPrior {
  double coef_prior_mean_intercept = -0.04;
  double coef_prior_mean_slope = 0.6;
  double coef_prior_var_intercept = 1.0;
  double coef_prior_var_slope = 0.3;
  double nu_h = 5.0;   // IG(nu_h/2, nu_h*s2_h/2) for the innovation variance
  double s2_h = 0.25;
  double init_mean = 0.0;   // prior for the t=1 log-volatility state
  double init_var = 10.0;
  double offset_scale = 1e-6;  // relative offset in log(u^2 + offset)

  void validate() const;
};

struct PriorConfig {
  RegressionPrior regression;
  LoadingPrior loading;
  VolatilityPrior volatility;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Chain configuration
// ---------------------------------------------------------------------------

struct ChainConfig {
  int n_iter = 12000;
  int burn_in = 2000;
  int thin = 1;
  std::uint64_t seed = 0;
  int path_thin = 10;  // latent-path snapshots every path_thin-th retained sweep
  int retry_budget_truncated = 1000;
  int retry_budget_stationarity = 1000;
  int checkpoint_every = 0;        // 0 disables checkpointing
  std::string checkpoint_path;
  std::string resume_from;

  int n_retained() const { return (n_iter - burn_in) / thin; }
  void validate() const;
};

// One retained scalar from the DGP ground truth used by recovery tests.
struct GroundTruth {
  ParameterState state;
};

}  // namespace panelsv
