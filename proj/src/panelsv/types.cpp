#include "panelsv/types.hpp"

#include <cmath>

#include "panelsv/common.hpp"

namespace panelsv {

void ModelDims::validate() const {
  if (n_individuals < 1) fail(ErrorCode::dimension, "dims: N must be >= 1");
  if (n_periods < 2) fail(ErrorCode::dimension, "dims: T must be >= 2");
  if (n_covariates < 1) fail(ErrorCode::dimension, "dims: k must be >= 1");
  if (n_factors < 0) fail(ErrorCode::dimension, "dims: p must be >= 0");
  if (n_factors >= n_individuals)
    fail(ErrorCode::dimension, "dims: p must be < N");
}

void PanelDataset::validate() const {
  const int n = n_individuals();
  const int t = n_periods();
  if (n < 1 || t < 2) fail(ErrorCode::dimension, "dataset: need N >= 1, T >= 2");
  if (static_cast<int>(covariates.size()) != n)
    fail(ErrorCode::dimension, "dataset: covariate blocks must match N");
  const int k = n_covariates();
  if (k < 1) fail(ErrorCode::dimension, "dataset: need k >= 1");
  for (const auto& x : covariates)
    if (x.rows() != t || x.cols() != k)
      fail(ErrorCode::dimension, "dataset: covariate block shape mismatch");
  if (static_cast<int>(period_index.size()) != t)
    fail(ErrorCode::dimension, "dataset: period index length mismatch");
  for (int j = 1; j < t; ++j)
    if (period_index[j] != period_index[j - 1] + 1)
      fail(ErrorCode::invalid_argument,
           "dataset: period labels must be consecutive (gap after " +
               std::to_string(period_index[j - 1]) + ")");
  if (!returns.allFinite())
    fail(ErrorCode::invalid_argument, "dataset: non-finite return value");
  for (const auto& x : covariates)
    if (!x.allFinite())
      fail(ErrorCode::invalid_argument, "dataset: non-finite covariate value");
  if (!individual_ids.empty() &&
      static_cast<int>(individual_ids.size()) != n)
    fail(ErrorCode::dimension, "dataset: id list length mismatch");
}

std::uint64_t PanelDataset::digest() const {
  Fnv1a h;
  h.update(static_cast<std::int64_t>(n_individuals()));
  h.update(static_cast<std::int64_t>(n_periods()));
  h.update(static_cast<std::int64_t>(n_covariates()));
  for (const auto& id : individual_ids) h.update(id);
  for (auto pidx : period_index) h.update(static_cast<std::int64_t>(pidx));
  for (int i = 0; i < returns.rows(); ++i)
    for (int t = 0; t < returns.cols(); ++t) h.update(returns(i, t));
  for (const auto& x : covariates)
    for (int t = 0; t < x.rows(); ++t)
      for (int a = 0; a < x.cols(); ++a) h.update(x(t, a));
  return h.value();
}

void RegressionPrior::validate() const {
  if (!(mu_beta_prior_cov > 0.0))
    fail(ErrorCode::invalid_argument, "prior: mu_beta_prior_cov must be > 0");
  if (wishart_dof < 0.0 || wishart_scale < 0.0)
    fail(ErrorCode::invalid_argument, "prior: wishart settings must be >= 0");
  if (!(nu_sigma > 0.0) || !(delta_sigma0 > 0.0) || !(nu_sigma0 > 0.0))
    fail(ErrorCode::invalid_argument, "prior: sigma hierarchy must be > 0");
  if (!(nu_vartheta > 0.0))
    fail(ErrorCode::invalid_argument, "prior: nu_vartheta must be > 0");
  if (!(t_proposal_dof > 1.0))
    fail(ErrorCode::invalid_argument, "prior: t_proposal_dof must be > 1");
}

void LoadingPrior::validate() const {
  if (!(c_prior_var > 0.0) || !(nu_lambda > 0.0) || !(delta_lambda > 0.0) ||
      !(s2_lambda > 0.0) || !(t_dof > 0.0))
    fail(ErrorCode::invalid_argument, "prior: loading prior must be positive");
}

void VolatilityPrior::validate() const {
  if (!(coef_prior_var_intercept >= 0.0) || !(coef_prior_var_slope >= 0.0))
    fail(ErrorCode::invalid_argument, "prior: vol coef variances must be >= 0");
  if (!(nu_h > 0.0) || !(s2_h > 0.0) || !(init_var > 0.0))
    fail(ErrorCode::invalid_argument, "prior: vol variance prior must be > 0");
  if (!(offset_scale > 0.0))
    fail(ErrorCode::invalid_argument, "prior: offset_scale must be > 0");
}

void PriorConfig::validate() const {
  regression.validate();
  loading.validate();
  volatility.validate();
}

void ChainConfig::validate() const {
  if (n_iter < 1) fail(ErrorCode::invalid_argument, "chain: n_iter must be >= 1");
  if (burn_in < 0 || burn_in >= n_iter)
    fail(ErrorCode::invalid_argument, "chain: need 0 <= burn_in < n_iter");
  if (thin < 1) fail(ErrorCode::invalid_argument, "chain: thin must be >= 1");
  if (path_thin < 1)
    fail(ErrorCode::invalid_argument, "chain: path_thin must be >= 1");
  if (retry_budget_truncated < 1 || retry_budget_stationarity < 1)
    fail(ErrorCode::invalid_argument, "chain: retry budgets must be >= 1");
  if (checkpoint_every < 0)
    fail(ErrorCode::invalid_argument, "chain: checkpoint_every must be >= 0");
}

}  // namespace panelsv
