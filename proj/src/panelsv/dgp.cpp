#include "panelsv/dgp.hpp"

#include <algorithm>
#include <cmath>

#include "panelsv/common.hpp"
#include "panelsv/model.hpp"
#include "panelsv/rng.hpp"

namespace panelsv {

void DgpConfig::validate() const {
  dims.validate();
  if (!(beta_var > 0.0) || !(lambda_var > 0.0) || !(alpha0_var > 0.0) ||
      !(phi0_var > 0.0))
    fail(ErrorCode::invalid_argument, "dgp: variances must be > 0");
  if (!covariate_moments.empty()) {
    if (static_cast<int>(covariate_moments.size()) != dims.n_covariates - 1)
      fail(ErrorCode::invalid_argument,
           "dgp: need one (mean, variance) pair per non-intercept covariate");
    for (const auto& [m, v] : covariate_moments)
      if (!(v > 0.0))
        fail(ErrorCode::invalid_argument, "dgp: covariate variance must be > 0");
  }
}

bool is_known_scenario(const std::string& name) {
  return name.size() == 2 && name[0] == 'M' && name[1] >= '1' && name[1] <= '8';
}

DgpConfig scenario_preset(const std::string& name) {
  // Table 1: (N, k, p, T) per scenario.
  struct Row { int n, k, p, t; };
  static const Row rows[8] = {
      {10, 3, 3, 200}, {20, 3, 3, 200}, {10, 3, 3, 400}, {20, 3, 3, 400},
      {10, 4, 4, 200}, {20, 4, 4, 200}, {40, 4, 4, 400}, {40, 4, 6, 1000}};
  if (!is_known_scenario(name))
    fail(ErrorCode::unknown_scenario, "unknown scenario '" + name + "'");
  const Row& r = rows[name[1] - '1'];
  DgpConfig cfg;
  cfg.dims = {r.n, r.t, r.k, r.p};
  return cfg;
}

std::pair<PanelDataset, GroundTruth> simulate_panel(const DgpConfig& config) {
  config.validate();
  const int n = config.dims.n_individuals, t = config.dims.n_periods,
            k = config.dims.n_covariates, p = config.dims.n_factors;
  Rng rng(config.seed);

  PanelDataset data;
  data.returns.resize(n, t);
  data.covariates.assign(n, MatrixXd::Ones(t, k));
  data.period_index.resize(t);
  for (int s = 0; s < t; ++s) data.period_index[s] = s + 1;
  data.individual_ids.resize(n);
  for (int i = 0; i < n; ++i) data.individual_ids[i] = "i" + std::to_string(i + 1);

  // (1) covariates: column 1 is the intercept, columns a = 2..k random.
  for (int a = 2; a <= k; ++a) {
    double mean = 2.0 * a, sd = std::sqrt(std::pow(2.0, a));
    if (!config.covariate_moments.empty()) {
      mean = config.covariate_moments[a - 2].first;
      sd = std::sqrt(config.covariate_moments[a - 2].second);
    }
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < t; ++s)
        data.covariates[i](s, a - 1) = rng.normal(mean, sd);
  }

  GroundTruth truth;
  ParameterState& st = truth.state;

  // (2) regression coefficients.
  st.coeffs.beta.resize(n, k);
  const double beta_sd = std::sqrt(config.beta_var);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a)
      st.coeffs.beta(i, a) = rng.normal(config.beta_mean, beta_sd);

  // (3) loadings, then projected onto the identified form.
  st.loadings.lambda.resize(n, p);
  const double lam_sd = std::sqrt(config.lambda_var);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      st.loadings.lambda(i, j) = rng.normal(config.lambda_mean, lam_sd);
  for (int i = 0; i < std::min(n, p); ++i) {
    for (int j = i + 1; j < p; ++j) st.loadings.lambda(i, j) = 0.0;
    st.loadings.lambda(i, i) = std::fabs(st.loadings.lambda(i, i));
    if (st.loadings.lambda(i, i) == 0.0) st.loadings.lambda(i, i) = lam_sd;
  }

  // (4)-(5) volatility AR coefficients, stationary truths near the stated means.
  auto& vc = st.volcoeffs;
  vc.alpha0.resize(n); vc.alpha1.resize(n);
  vc.phi0.resize(p); vc.phi1.resize(p);
  const double a0_sd = std::sqrt(config.alpha0_var);
  for (int i = 0; i < n; ++i) {
    vc.alpha0[i] = rng.normal(config.alpha0_mean, a0_sd);
    vc.alpha1[i] = std::clamp(
        config.alpha1_center + rng.uniform(-config.alpha1_jitter, config.alpha1_jitter),
        -0.999, 0.999);
  }
  const double p0_sd = std::sqrt(config.phi0_var);
  for (int j = 0; j < p; ++j) {
    vc.phi0[j] = rng.normal(config.phi0_mean, p0_sd);
    vc.phi1[j] = std::clamp(
        config.phi1_center + rng.uniform(-config.phi1_jitter, config.phi1_jitter),
        -0.999, 0.999);
  }
  vc.sigma2_v = VectorXd::Ones(n);
  vc.sigma2_w = VectorXd::Ones(p);

  // (6)-(9) white-noise innovations, volatility paths from h = q = 0.
  st.logvols.h.resize(n, t);
  st.logvols.q.resize(p, t);
  for (int i = 0; i < n; ++i) {
    double prev = config.h_init;
    for (int s = 0; s < t; ++s) {
      prev = vc.alpha0[i] + vc.alpha1[i] * prev + rng.normal();
      st.logvols.h(i, s) = prev;
    }
  }
  for (int j = 0; j < p; ++j) {
    double prev = config.q_init;
    for (int s = 0; s < t; ++s) {
      prev = vc.phi0[j] + vc.phi1[j] * prev + rng.normal();
      st.logvols.q(j, s) = prev;
    }
  }

  // (10)-(11) error components and factors, then the returns.
  MatrixXd u(n, t);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t; ++s)
      u(i, s) = std::exp(0.5 * st.logvols.h(i, s)) * rng.normal();
  st.factors.f.resize(p, t);
  for (int j = 0; j < p; ++j)
    for (int s = 0; s < t; ++s)
      st.factors.f(j, s) = std::exp(0.5 * st.logvols.q(j, s)) * rng.normal();

  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t; ++s) {
      double mean = st.coeffs.beta.row(i).dot(data.covariates[i].row(s));
      if (p > 0) mean += st.loadings.lambda.row(i).dot(st.factors.f.col(s));
      data.returns(i, s) = mean + u(i, s);
    }

  st.scales.sigma2_err = VectorXd::Ones(n);
  st.scales.vartheta = VectorXd::Ones(n);
  st.scales.delta_sigma = 1.0;
  st.scales.phi_acf.resize(n + p);
  st.scales.phi_acf << vc.alpha1, vc.phi1;
  st.mixture_indicators = MatrixXi::Constant(n + p, t, 4);

  data.validate();
  auto violations = validate_state(st, config.dims);
  if (!violations.empty())
    fail(ErrorCode::internal, "dgp: ground truth failed validation: " + violations[0]);
  return {std::move(data), std::move(truth)};
}

PanelDataset standardize_covariates(const PanelDataset& dataset,
                                    bool skip_intercept) {
  dataset.validate();
  PanelDataset out = dataset;
  const int n = dataset.n_individuals(), t = dataset.n_periods(),
            k = dataset.n_covariates();
  const double cells = static_cast<double>(n) * t;
  for (int a = skip_intercept ? 1 : 0; a < k; ++a) {
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += dataset.covariates[i].col(a).sum();
      sumsq += dataset.covariates[i].col(a).squaredNorm();
    }
    const double mean = sum / cells;
    const double var = (sumsq - cells * mean * mean) / (cells - 1.0);
    if (!(var > 1e-24 * std::max(1.0, mean * mean)))
      fail(ErrorCode::invalid_argument,
           "standardize: covariate x" + std::to_string(a + 1) +
               " has zero variance over the pooled panel");
    const double sd = std::sqrt(var);
    for (int i = 0; i < n; ++i)
      out.covariates[i].col(a) = (dataset.covariates[i].col(a).array() - mean) / sd;
  }
  return out;
}

}  // namespace panelsv
