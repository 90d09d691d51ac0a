#pragma once

#include <functional>
#include <utility>

#include "panelsv/types.hpp"

namespace panelsv {

class Rng;

// RegressionPrior broadcast to concrete k-dimensional hyperparameters.
struct ResolvedRegressionPrior {
  VectorXd mu_beta_prior_mean;  // k
  MatrixXd mu_beta_prior_cov;   // k x k SPD
  double wishart_dof;
  MatrixXd wishart_scale;       // k x k SPD
  double nu_sigma, delta_sigma0, nu_sigma0, nu_vartheta, t_proposal_dof;
};

ResolvedRegressionPrior resolve_regression_prior(const RegressionPrior& prior,
                                                 int k);

// Conjugate draw of every row of beta. The target is the factor-adjusted
// return pre-whitened by exp(h/2); error_precision[i] is the scalar M
// multiplying the whitened Gram matrix.
RegressionCoeffs sample_beta_block(const PanelDataset& dataset,
                                   const ParameterState& state,
                                   const VectorXd& mu_beta,
                                   const MatrixXd& v_beta_inv,
                                   const VectorXd& error_precision, Rng& rng);

// Posterior mean and covariance of one row's conjugate normal conditional
// (the distribution sample_beta_block draws from).
std::pair<VectorXd, MatrixXd> beta_posterior_moments(
    const PanelDataset& dataset, const ParameterState& state,
    const VectorXd& mu_beta, const MatrixXd& v_beta_inv,
    const VectorXd& error_precision, int i);

// mu_beta from its normal full conditional, then V_beta^{-1} from its
// Wishart full conditional.
std::pair<VectorXd, MatrixXd> sample_beta_hyperparams(
    const RegressionCoeffs& coeffs, const ResolvedRegressionPrior& prior,
    const MatrixXd& v_beta_inv_current, Rng& rng);

// nu_i = sigma_i^{-2} ssr_i and delta = sum_i vartheta_i ssr_i over the raw
// residuals r - beta'x - lambda'f.
std::pair<VectorXd, double> compute_nu_delta(const PanelDataset& dataset,
                                             const ParameterState& state);

VectorXd sample_vartheta(const VectorXd& nu, const ResolvedRegressionPrior& prior,
                         int n_individuals, Rng& rng);

// delta_vartheta is the current value of the hierarchy's delta_sigma draw.
VectorXd sample_sigma_err(double delta, double delta_vartheta,
                          const ResolvedRegressionPrior& prior,
                          int n_individuals, Rng& rng);

double sample_delta_sigma(const VectorXd& sigma2_err,
                          const ResolvedRegressionPrior& prior, Rng& rng);

// Independence Metropolis-Hastings step with a multivariate-t proposal.
struct TProposalSpec {
  VectorXd location;
  MatrixXd scale;  // SPD
  double dof;      // > 1
};

struct MhResult {
  VectorXd value;
  bool accepted;
};

MhResult sample_phi_mh(const VectorXd& current,
                       const std::function<double(const VectorXd&)>& log_target,
                       const TProposalSpec& proposal, Rng& rng);

// Log target for the working-model autocorrelation vector: uniform prior on
// the stationary box times the phi-free Gaussian working likelihood.
double phi_log_target(const PanelDataset& dataset, const ParameterState& state,
                      const VectorXd& phi);

}  // namespace panelsv
