#include "panelsv/regression.hpp"

#include <cmath>

#include "panelsv/common.hpp"
#include "panelsv/dist.hpp"
#include "panelsv/rng.hpp"

namespace panelsv {

ResolvedRegressionPrior resolve_regression_prior(const RegressionPrior& prior,
                                                 int k) {
  prior.validate();
  ResolvedRegressionPrior r;
  r.mu_beta_prior_mean = VectorXd::Constant(k, prior.mu_beta_prior_mean);
  r.mu_beta_prior_cov = MatrixXd::Identity(k, k) * prior.mu_beta_prior_cov;
  r.wishart_dof = prior.wishart_dof > 0.0 ? prior.wishart_dof : k + 2.0;
  double ws = prior.wishart_scale > 0.0 ? prior.wishart_scale : 2.0 / r.wishart_dof;
  r.wishart_scale = MatrixXd::Identity(k, k) * ws;
  r.nu_sigma = prior.nu_sigma;
  r.delta_sigma0 = prior.delta_sigma0;
  r.nu_sigma0 = prior.nu_sigma0;
  r.nu_vartheta = prior.nu_vartheta;
  r.t_proposal_dof = prior.t_proposal_dof;
  return r;
}

RegressionCoeffs sample_beta_block(const PanelDataset& dataset,
                                   const ParameterState& state,
                                   const VectorXd& mu_beta,
                                   const MatrixXd& v_beta_inv,
                                   const VectorXd& error_precision, Rng& rng) {
  const int n = dataset.n_individuals(), t = dataset.n_periods(),
            k = dataset.n_covariates();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  if (error_precision.size() != n)
    fail(ErrorCode::dimension, "sample_beta_block: precision length mismatch");

  RegressionCoeffs out;
  out.beta.resize(n, k);
  MatrixXd xw(t, k);
  VectorXd yw(t);
  // Identity-keyed substreams: permuting individuals permutes the draws.
  const std::uint64_t base = rng.next_u64();
  for (int i = 0; i < n; ++i) {
    std::uint64_t key =
        static_cast<int>(dataset.individual_ids.size()) == n
            ? fnv1a_string(dataset.individual_ids[i])
            : static_cast<std::uint64_t>(i);
    Rng child(splitmix64(base ^ splitmix64(key)));
    for (int s = 0; s < t; ++s) {
      double w = std::exp(-0.5 * state.logvols.h(i, s));
      double target = dataset.returns(i, s);
      if (p > 0)
        target -= state.loadings.lambda.row(i).dot(state.factors.f.col(s));
      xw.row(s) = dataset.covariates[i].row(s) * w;
      yw[s] = target * w;
    }
    const double m = error_precision[i];
    MatrixXd prec = m * (xw.transpose() * xw) + v_beta_inv;
    VectorXd rhs = m * (xw.transpose() * yw) + v_beta_inv * mu_beta;
    Eigen::LLT<MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::numeric,
           "sample_beta_block: singular posterior precision for individual " +
               std::to_string(i + 1) + " (degenerate covariates)");
    VectorXd mean = llt.solve(rhs);
    // Solve L' z = normal to draw with covariance prec^{-1}.
    VectorXd z = llt.matrixL().transpose().solve(child.normal_vector(k));
    out.beta.row(i) = (mean + z).transpose();
  }
  return out;
}

std::pair<VectorXd, MatrixXd> beta_posterior_moments(
    const PanelDataset& dataset, const ParameterState& state,
    const VectorXd& mu_beta, const MatrixXd& v_beta_inv,
    const VectorXd& error_precision, int i) {
  const int t = dataset.n_periods(), k = dataset.n_covariates();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  MatrixXd xw(t, k);
  VectorXd yw(t);
  for (int s = 0; s < t; ++s) {
    double w = std::exp(-0.5 * state.logvols.h(i, s));
    double target = dataset.returns(i, s);
    if (p > 0) target -= state.loadings.lambda.row(i).dot(state.factors.f.col(s));
    xw.row(s) = dataset.covariates[i].row(s) * w;
    yw[s] = target * w;
  }
  const double m = error_precision[i];
  MatrixXd prec = m * (xw.transpose() * xw) + v_beta_inv;
  VectorXd rhs = m * (xw.transpose() * yw) + v_beta_inv * mu_beta;
  Eigen::LLT<MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "beta_posterior_moments: singular precision");
  return {llt.solve(rhs), llt.solve(MatrixXd::Identity(k, k))};
}

std::pair<VectorXd, MatrixXd> sample_beta_hyperparams(
    const RegressionCoeffs& coeffs, const ResolvedRegressionPrior& prior,
    const MatrixXd& v_beta_inv_current, Rng& rng) {
  const int n = static_cast<int>(coeffs.beta.rows());
  const int k = static_cast<int>(coeffs.beta.cols());
  if (n < 1) fail(ErrorCode::dimension, "sample_beta_hyperparams: need N >= 1");

  Eigen::LLT<MatrixXd> prior_llt(prior.mu_beta_prior_cov);
  if (prior_llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "sample_beta_hyperparams: prior cov not SPD");
  MatrixXd prior_prec = prior_llt.solve(MatrixXd::Identity(k, k));

  MatrixXd post_prec = prior_prec + n * v_beta_inv_current;
  VectorXd rhs = prior_prec * prior.mu_beta_prior_mean +
                 v_beta_inv_current * coeffs.beta.colwise().sum().transpose();
  Eigen::LLT<MatrixXd> llt(post_prec);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "sample_beta_hyperparams: posterior precision not SPD");
  VectorXd mean = llt.solve(rhs);
  VectorXd mu_beta = mean + llt.matrixL().transpose().solve(rng.normal_vector(k));

  MatrixXd scatter = MatrixXd::Zero(k, k);
  for (int i = 0; i < n; ++i) {
    VectorXd d = coeffs.beta.row(i).transpose() - mu_beta;
    scatter += d * d.transpose();
  }
  Eigen::LLT<MatrixXd> wllt(prior.wishart_scale);
  if (wllt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "sample_beta_hyperparams: Wishart scale not SPD");
  MatrixXd scale_inv = wllt.solve(MatrixXd::Identity(k, k)) + scatter;
  Eigen::LLT<MatrixXd> sllt(scale_inv);
  if (sllt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "sample_beta_hyperparams: accumulated scatter not SPD");
  MatrixXd post_scale = sllt.solve(MatrixXd::Identity(k, k));
  MatrixXd v_beta_inv = wishart_draw(prior.wishart_dof + n, post_scale, rng);
  return {mu_beta, v_beta_inv};
}

std::pair<VectorXd, double> compute_nu_delta(const PanelDataset& dataset,
                                             const ParameterState& state) {
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  VectorXd nu(n);
  double delta = 0.0;
  for (int i = 0; i < n; ++i) {
    double ssr = 0.0;
    for (int s = 0; s < t; ++s) {
      double e = dataset.returns(i, s) -
                 state.coeffs.beta.row(i).dot(dataset.covariates[i].row(s));
      if (p > 0) e -= state.loadings.lambda.row(i).dot(state.factors.f.col(s));
      ssr += e * e;
    }
    nu[i] = ssr / state.scales.sigma2_err[i];
    delta += state.scales.vartheta[i] * ssr;
  }
  return {nu, delta};
}

VectorXd sample_vartheta(const VectorXd& nu, const ResolvedRegressionPrior& prior,
                         int n_individuals, Rng& rng) {
  VectorXd out(nu.size());
  const double shape = 0.5 * (prior.nu_vartheta + n_individuals);
  for (int i = 0; i < nu.size(); ++i) {
    double rate = 0.5 * (prior.nu_vartheta + nu[i]);
    if (!(rate > 0.0))
      fail(ErrorCode::numeric, "sample_vartheta: nonpositive rate");
    out[i] = rng.gamma(shape, rate);
  }
  return out;
}

VectorXd sample_sigma_err(double delta, double delta_vartheta,
                          const ResolvedRegressionPrior& prior,
                          int n_individuals, Rng& rng) {
  const double shape = 0.5 * (prior.nu_vartheta + n_individuals);
  const double scale = 0.5 * (delta_vartheta + delta);
  if (!(scale > 0.0))
    fail(ErrorCode::numeric, "sample_sigma_err: nonpositive scale");
  VectorXd out(n_individuals);
  for (int i = 0; i < n_individuals; ++i) out[i] = rng.inv_gamma(shape, scale);
  return out;
}

double sample_delta_sigma(const VectorXd& sigma2_err,
                          const ResolvedRegressionPrior& prior, Rng& rng) {
  const int n = static_cast<int>(sigma2_err.size());
  double shape = 0.5 * (prior.nu_sigma0 + n * prior.nu_sigma);
  double rate = 0.5 * (prior.delta_sigma0 + sigma2_err.cwiseInverse().sum());
  return rng.gamma(shape, rate);
}

MhResult sample_phi_mh(const VectorXd& current,
                       const std::function<double(const VectorXd&)>& log_target,
                       const TProposalSpec& proposal, Rng& rng) {
  if (!(proposal.dof > 1.0))
    fail(ErrorCode::invalid_argument, "sample_phi_mh: proposal dof must be > 1");
  VectorXd cand = mvt_draw(proposal.location, proposal.scale, proposal.dof, rng);
  double lt_cand = log_target(cand);
  if (!std::isfinite(lt_cand)) return {current, false};
  double lt_cur = log_target(current);
  double lq_cand = mvt_logpdf(cand, proposal.location, proposal.scale, proposal.dof);
  double lq_cur = mvt_logpdf(current, proposal.location, proposal.scale, proposal.dof);
  double log_ratio = (lt_cand + lq_cur) - (lt_cur + lq_cand);
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio)
    return {cand, true};
  return {current, false};
}

double phi_log_target(const PanelDataset& dataset, const ParameterState& state,
                      const VectorXd& phi) {
  // Uniform prior on the stationary box; outside it the mass is zero.
  for (int i = 0; i < phi.size(); ++i)
    if (!(std::fabs(phi[i]) < 1.0))
      return -std::numeric_limits<double>::infinity();
  // Working Gaussian likelihood N(r_i | beta'x_i + lambda'f, sigma_i^2
  // vartheta_i^{-1} I); it carries no phi dependence but is part of the
  // stated target.
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  double ll = 0.0;
  const double log2pi = 1.8378770664093454836;
  for (int i = 0; i < n; ++i) {
    double var = state.scales.sigma2_err[i] / state.scales.vartheta[i];
    double ssr = 0.0;
    for (int s = 0; s < t; ++s) {
      double e = dataset.returns(i, s) -
                 state.coeffs.beta.row(i).dot(dataset.covariates[i].row(s));
      if (p > 0) e -= state.loadings.lambda.row(i).dot(state.factors.f.col(s));
      ssr += e * e;
    }
    ll += -0.5 * t * (log2pi + std::log(var)) - 0.5 * ssr / var;
  }
  return ll;
}

}  // namespace panelsv
