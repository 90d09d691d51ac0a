#include "panelsv/chain.hpp"

#include <algorithm>
#include <cmath>

#include "panelsv/common.hpp"
#include "panelsv/dgp.hpp"
#include "panelsv/dist.hpp"
#include "panelsv/factor.hpp"
#include "panelsv/io.hpp"
#include "panelsv/model.hpp"
#include "panelsv/regression.hpp"
#include "panelsv/rng.hpp"
#include "panelsv/volatility.hpp"

namespace panelsv {

int ChainOutput::trace_index(const std::string& name) const {
  for (std::size_t i = 0; i < trace_names.size(); ++i)
    if (trace_names[i] == name) return static_cast<int>(i);
  fail(ErrorCode::invalid_argument, "unknown trace '" + name + "'");
}

namespace {

MatrixXd smoothed_log_square(const MatrixXd& series) {
  const int n = static_cast<int>(series.rows());
  const int t = static_cast<int>(series.cols());
  MatrixXd z(n, t);
  for (int i = 0; i < n; ++i) {
    double mean = series.row(i).mean();
    double var = (series.row(i).array() - mean).square().sum() / t;
    double off = std::max(1e-6 * var, 1e-100);
    for (int s = 0; s < t; ++s)
      z(i, s) = std::log(series(i, s) * series(i, s) + off);
  }
  MatrixXd out(n, t);
  for (int s = 0; s < t; ++s) {
    int lo = std::max(0, s - 2), hi = std::min(t - 1, s + 2);
    out.col(s) = z.middleCols(lo, hi - lo + 1).rowwise().mean();
  }
  return out;
}

std::vector<std::string> build_trace_names(int n, int k, int p) {
  std::vector<std::string> names;
  auto tag = [](const std::string& base, int a, int b = -1) {
    std::string s = base + "." + std::to_string(a);
    if (b >= 0) s += "." + std::to_string(b);
    return s;
  };
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= k; ++j) names.push_back(tag("beta", i, j));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= std::min(i, p); ++j) names.push_back(tag("lambda", i, j));
  for (int i = 1; i <= n; ++i) names.push_back(tag("alpha0", i));
  for (int i = 1; i <= n; ++i) names.push_back(tag("alpha1", i));
  for (int j = 1; j <= p; ++j) names.push_back(tag("phi0", j));
  for (int j = 1; j <= p; ++j) names.push_back(tag("phi1", j));
  for (int i = 1; i <= n; ++i) names.push_back(tag("sigma2_v", i));
  for (int j = 1; j <= p; ++j) names.push_back(tag("sigma2_w", j));
  for (int i = 1; i <= n; ++i) names.push_back(tag("sigma2_err", i));
  for (int i = 1; i <= n; ++i) names.push_back(tag("vartheta", i));
  names.push_back("delta_sigma");
  for (int j = 1; j <= k; ++j) names.push_back(tag("mu_beta", j));
  names.push_back("sigma_lambda");
  for (int s = 1; s <= n + p; ++s) names.push_back(tag("phi_acf", s));
  return names;
}

void record_row(const ChainState& st, MatrixXd& traces, int r) {
  const auto& ps = st.param;
  const int n = static_cast<int>(ps.coeffs.beta.rows());
  const int k = static_cast<int>(ps.coeffs.beta.cols());
  const int p = static_cast<int>(ps.loadings.lambda.cols());
  int c = 0;
  auto row = [&](int idx) -> double& { return traces(r, idx); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) row(c++) = ps.coeffs.beta(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < std::min(i + 1, p); ++j) row(c++) = ps.loadings.lambda(i, j);
  for (int i = 0; i < n; ++i) row(c++) = ps.volcoeffs.alpha0[i];
  for (int i = 0; i < n; ++i) row(c++) = ps.volcoeffs.alpha1[i];
  for (int j = 0; j < p; ++j) row(c++) = ps.volcoeffs.phi0[j];
  for (int j = 0; j < p; ++j) row(c++) = ps.volcoeffs.phi1[j];
  for (int i = 0; i < n; ++i) row(c++) = ps.volcoeffs.sigma2_v[i];
  for (int j = 0; j < p; ++j) row(c++) = ps.volcoeffs.sigma2_w[j];
  for (int i = 0; i < n; ++i) row(c++) = ps.scales.sigma2_err[i];
  for (int i = 0; i < n; ++i) row(c++) = ps.scales.vartheta[i];
  row(c++) = ps.scales.delta_sigma;
  for (int j = 0; j < k; ++j) row(c++) = st.mu_beta[j];
  row(c++) = st.sigma_lambda;
  for (int s = 0; s < n + p; ++s) row(c++) = ps.scales.phi_acf[s];
}

}  // namespace

ChainState initial_state(const PanelDataset& dataset, int n_factors,
                         const PriorConfig& priors) {
  dataset.validate();
  const int n = dataset.n_individuals(), t = dataset.n_periods(),
            k = dataset.n_covariates(), p = n_factors;
  ModelDims dims{n, t, k, p};
  dims.validate();

  ChainState st;
  auto& ps = st.param;

  // Per-individual OLS.
  ps.coeffs.beta.resize(n, k);
  MatrixXd resid(n, t);
  for (int i = 0; i < n; ++i) {
    const MatrixXd& x = dataset.covariates[i];
    Eigen::LLT<MatrixXd> llt(x.transpose() * x);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::numeric, "initial_state: degenerate covariates for individual " +
                                   std::to_string(i + 1));
    VectorXd b = llt.solve(x.transpose() * dataset.returns.row(i).transpose());
    ps.coeffs.beta.row(i) = b.transpose();
    resid.row(i) = dataset.returns.row(i) - (x * b).transpose();
  }

  // Principal components of the residual panel, rotated to the identified
  // lower-triangular positive-diagonal form.
  ps.loadings.lambda = MatrixXd::Zero(n, p);
  ps.factors.f = MatrixXd::Zero(p, t);
  if (p > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(resid.transpose(),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    MatrixXd lam =
        svd.matrixV().leftCols(p) *
        (svd.singularValues().head(p) / std::sqrt(double(t))).asDiagonal();
    MatrixXd f = std::sqrt(double(t)) * svd.matrixU().leftCols(p).transpose();
    Eigen::HouseholderQR<MatrixXd> qr(lam.topRows(p).transpose());
    MatrixXd rot = qr.householderQ();
    lam = lam * rot;
    f = rot.transpose() * f;
    for (int j = 0; j < p; ++j) {
      if (lam(j, j) < 0.0) {
        lam.col(j) *= -1.0;
        f.row(j) *= -1.0;
      }
      if (!(lam(j, j) > 0.0)) lam(j, j) = 1e-4;
      for (int j2 = j + 1; j2 < p; ++j2) lam(j, j2) = 0.0;
    }
    ps.loadings.lambda = lam;
    ps.factors.f = f;
    resid -= lam * f;
  }

  ps.logvols.h = smoothed_log_square(resid);
  ps.logvols.q = smoothed_log_square(ps.factors.f);

  ps.volcoeffs.alpha0 = VectorXd::Zero(n);
  ps.volcoeffs.alpha1 = VectorXd::Constant(n, 0.9);
  ps.volcoeffs.sigma2_v = VectorXd::Constant(n, 0.5);
  ps.volcoeffs.phi0 = VectorXd::Zero(p);
  ps.volcoeffs.phi1 = VectorXd::Constant(p, 0.9);
  ps.volcoeffs.sigma2_w = VectorXd::Constant(p, 0.5);

  ps.scales.sigma2_err = VectorXd::Ones(n);
  ps.scales.vartheta = VectorXd::Ones(n);
  ps.scales.delta_sigma = priors.regression.nu_sigma0 / priors.regression.delta_sigma0;
  ps.scales.phi_acf = VectorXd::Constant(n + p, 0.9);
  ps.mixture_indicators = MatrixXi::Constant(n + p, t, 4);

  auto rp = resolve_regression_prior(priors.regression, k);
  st.mu_beta = rp.mu_beta_prior_mean;
  st.v_beta_inv = rp.wishart_dof * rp.wishart_scale;
  st.sigma_lambda = 1.0;
  st.phi_hat = VectorXd::Constant(n + p, 0.9);
  st.phi_var = VectorXd::Constant(n + p, 0.01);
  st.next_sweep = 0;
  return st;
}

static std::string chain_config_hash(const PanelDataset& dataset, int n_factors,
                                     const PriorConfig& priors,
                                     const ChainConfig& config,
                                     bool has_intercept,
                                     bool for_resume = false) {
  Fnv1a h;
  h.update(static_cast<std::int64_t>(dataset.digest()));
  h.update(static_cast<std::int64_t>(n_factors));
  h.update(static_cast<std::int64_t>(has_intercept ? 1 : 0));
  const auto& r = priors.regression;
  for (double v : {r.mu_beta_prior_mean, r.mu_beta_prior_cov, r.wishart_dof,
                   r.wishart_scale, r.nu_sigma, r.delta_sigma0, r.nu_sigma0,
                   r.nu_vartheta, r.t_proposal_dof})
    h.update(v);
  const auto& l = priors.loading;
  for (double v : {l.c_prior_var, l.nu_lambda, l.delta_lambda, l.s2_lambda, l.t_dof})
    h.update(v);
  const auto& vp = priors.volatility;
  for (double v : {vp.coef_prior_mean_intercept, vp.coef_prior_mean_slope,
                   vp.coef_prior_var_intercept, vp.coef_prior_var_slope, vp.nu_h,
                   vp.s2_h, vp.init_mean, vp.init_var, vp.offset_scale})
    h.update(v);
  // Resumability only depends on the run identity up to its length.
  if (!for_resume) h.update(std::int64_t(config.n_iter));
  for (std::int64_t v :
       {std::int64_t(config.burn_in), std::int64_t(config.thin),
        std::int64_t(config.seed), std::int64_t(config.path_thin)})
    h.update(v);
  return h.hex();
}

ChainOutput run_chain(const PanelDataset& dataset, int n_factors,
                      const PriorConfig& priors, const ChainConfig& config,
                      bool has_intercept) {
  dataset.validate();
  priors.validate();
  config.validate();
  const int n = dataset.n_individuals(), t = dataset.n_periods(),
            k = dataset.n_covariates(), p = n_factors;
  ModelDims dims{n, t, k, p};
  dims.validate();

  auto rp = resolve_regression_prior(priors.regression, k);
  const auto& mixture = log_chisq_mixture();

  ChainOutput out;
  out.trace_names = build_trace_names(n, k, p);
  out.traces.resize(config.n_retained(), out.trace_names.size());
  out.n_individuals = n;
  out.n_covariates = k;
  out.n_factors = p;
  out.has_intercept = has_intercept;
  out.config_hash = chain_config_hash(dataset, p, priors, config, has_intercept);
  const std::string resume_hash =
      chain_config_hash(dataset, p, priors, config, has_intercept, true);
  out.h_mean = MatrixXd::Zero(n, t);
  out.q_mean = MatrixXd::Zero(p, t);
  out.f_mean = MatrixXd::Zero(p, t);

  ChainState st;
  Rng rng(config.seed);
  int retained = 0;
  long phi_attempts = 0, phi_accepts = 0;
  long load_attempts = 0, load_accepts = 0;

  if (!config.resume_from.empty()) {
    ChainCheckpoint cp = load_checkpoint(config.resume_from);
    if (cp.config_hash != resume_hash)
      fail(ErrorCode::invalid_argument,
           "resume: checkpoint was produced by a different run configuration");
    st = cp.state;
    rng.set_state(st.rng_state);
    retained = cp.retained;
    if (retained > 0)
      out.traces.topRows(retained) = cp.traces.topRows(retained);
    out.h_mean = cp.h_sum;
    out.q_mean = cp.q_sum;
    out.f_mean = cp.f_sum;
    out.h_snapshots = cp.h_snapshots;
    out.q_snapshots = cp.q_snapshots;
    out.f_snapshots = cp.f_snapshots;
    out.n_validation_failures = cp.n_validation_failures;
    phi_attempts = cp.phi_attempts;
    phi_accepts = cp.phi_accepts;
    load_attempts = cp.load_attempts;
    load_accepts = cp.load_accepts;
  } else {
    st = initial_state(dataset, p, priors);
  }

  auto run_block = [&](const char* name, int sweep, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      fail(e.code(), std::string("sweep ") + std::to_string(sweep + 1) + ", " +
                         name + " block: " + e.what());
    }
  };

  for (int sweep = st.next_sweep; sweep < config.n_iter; ++sweep) {
    // -------- regression block --------
    run_block("regression", sweep, [&] {
      // Exact full conditional on the whitened scale: the exp(h/2)
      // pre-whitening already carries the error covariance, so the working
      // precision multiplier is one.
      VectorXd unit = VectorXd::Ones(n);
      st.param.coeffs =
          sample_beta_block(dataset, st.param, st.mu_beta, st.v_beta_inv, unit, rng);
      auto [nu, delta] = compute_nu_delta(dataset, st.param);
      st.param.scales.vartheta = sample_vartheta(nu, rp, n, rng);
      st.param.scales.sigma2_err =
          sample_sigma_err(delta, st.param.scales.delta_sigma, rp, n, rng);

      TProposalSpec prop;
      prop.location = st.phi_hat;
      prop.scale = (st.phi_var.array().max(1e-8)).matrix().asDiagonal();
      prop.dof = rp.t_proposal_dof;
      auto target = [&](const VectorXd& phi) {
        return phi_log_target(dataset, st.param, phi);
      };
      MhResult mh = sample_phi_mh(st.param.scales.phi_acf, target, prop, rng);
      st.param.scales.phi_acf = mh.value;
      ++phi_attempts;
      phi_accepts += mh.accepted ? 1 : 0;

      auto [mu, vinv] = sample_beta_hyperparams(st.param.coeffs, rp, st.v_beta_inv, rng);
      st.mu_beta = mu;
      st.v_beta_inv = vinv;
      st.param.scales.delta_sigma =
          sample_delta_sigma(st.param.scales.sigma2_err, rp, rng);
    });

    // -------- factor block --------
    if (p > 0) {
      run_block("factor", sweep, [&] {
        for (int i = 0; i < n; ++i) {
          VectorXd row = sample_loading_row(i, dataset, st.param, priors.loading,
                                            rng, config.retry_budget_truncated);
          st.param.loadings.lambda.row(i).setZero();
          st.param.loadings.lambda.row(i).head(row.size()) = row.transpose();
        }
        st.sigma_lambda =
            sample_sigma_lambda(dataset, st.param, priors.loading, rng);
        for (int i = 0; i < n; ++i) {
          auto res = refresh_loading_row_mh(i, dataset, st.param, priors.loading, rng);
          if (res.proposal_built) {
            ++load_attempts;
            load_accepts += res.accepted ? 1 : 0;
            if (res.accepted) {
              st.param.loadings.lambda.row(i).setZero();
              st.param.loadings.lambda.row(i).head(res.row.size()) =
                  res.row.transpose();
            }
          }
        }
        for (int s = 0; s < t; ++s)
          st.param.factors.f.col(s) = sample_factors_t(s, dataset, st.param, rng);
      });
    }

    // -------- volatility block --------
    run_block("volatility", sweep, [&] {
      StateSpaceView view =
          build_state_space(dataset, st.param, priors.volatility.offset_scale);
      MatrixXd paths(n + p, t);
      paths.topRows(n) = st.param.logvols.h;
      paths.bottomRows(p) = st.param.logvols.q;
      st.param.mixture_indicators =
          sample_mixture_indicators(view.z - paths, mixture, rng);
      apply_indicators(view, st.param.mixture_indicators, mixture);
      FilterMoments moments =
          forward_filter(view, VectorXd::Constant(n + p, priors.volatility.init_mean),
                         VectorXd::Constant(n + p, priors.volatility.init_var));
      MatrixXd sampled = backward_sample(moments, view, rng);
      st.param.logvols.h = sampled.topRows(n);
      st.param.logvols.q = sampled.bottomRows(p);

      VolCoeffsDraw draw =
          sample_vol_coeffs(st.param.logvols, priors.volatility, rng,
                            config.retry_budget_stationarity);
      st.param.volcoeffs = draw.coeffs;
      st.phi_hat = draw.slope_mean;
      st.phi_var = draw.slope_var;
    });

    // -------- retention --------
    if (sweep >= config.burn_in &&
        (sweep - config.burn_in + 1) % config.thin == 0 &&
        retained < config.n_retained()) {
      record_row(st, out.traces, retained);
      if (!validate_state(st.param, dims).empty()) ++out.n_validation_failures;
      out.h_mean += st.param.logvols.h;
      out.q_mean += st.param.logvols.q;
      out.f_mean += st.param.factors.f;
      if (retained % config.path_thin == 0) {
        out.h_snapshots.push_back(st.param.logvols.h);
        out.q_snapshots.push_back(st.param.logvols.q);
        out.f_snapshots.push_back(st.param.factors.f);
      }
      ++retained;
    }

    if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
        (sweep + 1) % config.checkpoint_every == 0) {
      ChainCheckpoint cp;
      st.next_sweep = sweep + 1;
      st.rng_state = rng.state();
      cp.state = st;
      cp.retained = retained;
      cp.traces = out.traces.topRows(retained);
      cp.h_sum = out.h_mean;
      cp.q_sum = out.q_mean;
      cp.f_sum = out.f_mean;
      cp.h_snapshots = out.h_snapshots;
      cp.q_snapshots = out.q_snapshots;
      cp.f_snapshots = out.f_snapshots;
      cp.n_validation_failures = out.n_validation_failures;
      cp.phi_attempts = phi_attempts;
      cp.phi_accepts = phi_accepts;
      cp.load_attempts = load_attempts;
      cp.load_accepts = load_accepts;
      cp.config_hash = resume_hash;
      save_checkpoint(cp, config.checkpoint_path);
    }
  }

  out.n_retained = retained;
  if (retained > 0) {
    out.h_mean /= retained;
    out.q_mean /= retained;
    out.f_mean /= retained;
  }
  out.acceptance_rates["phi_mh"] =
      phi_attempts > 0 ? double(phi_accepts) / double(phi_attempts) : 0.0;
  out.acceptance_rates["loading_mh"] =
      load_attempts > 0 ? double(load_accepts) / double(load_attempts) : 0.0;
  return out;
}

SummaryTable summarize(const ChainOutput& output,
                       const std::vector<std::string>& individual_ids) {
  if (output.n_retained < 2)
    fail(ErrorCode::invalid_argument, "summarize: need at least 2 retained draws");
  const int n = output.n_individuals, k = output.n_covariates;
  SummaryTable table;
  table.mean.resize(k, n);
  table.sd.resize(k, n);
  table.t.resize(k, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      int idx = output.trace_index("beta." + std::to_string(i + 1) + "." +
                                   std::to_string(j + 1));
      VectorXd tr = output.traces.col(idx).head(output.n_retained);
      double mean = tr.mean();
      double sd = std::sqrt((tr.array() - mean).square().sum() /
                            (output.n_retained - 1));
      table.mean(j, i) = mean;
      table.sd(j, i) = sd;
      table.t(j, i) = sd > 0.0
                          ? mean / sd
                          : (mean == 0.0 ? 0.0
                                         : std::copysign(
                                               std::numeric_limits<double>::infinity(),
                                               mean));
    }
  for (int j = 0; j < k; ++j) {
    if (output.has_intercept)
      table.row_labels.push_back(j == 0 ? "const" : "var" + std::to_string(j));
    else
      table.row_labels.push_back("var" + std::to_string(j + 1));
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(individual_ids.size()) == n)
      table.column_labels.push_back(individual_ids[i]);
    else
      table.column_labels.push_back("ind" + std::to_string(i + 1));
  }
  return table;
}

VectorXd autocorrelation(const VectorXd& series, int lags) {
  const int nobs = static_cast<int>(series.size());
  double mean = series.mean();
  VectorXd centered = series.array() - mean;
  double denom = centered.squaredNorm();
  VectorXd acf(lags);
  for (int l = 1; l <= lags; ++l) {
    double num = 0.0;
    for (int s = 0; s + l < nobs; ++s) num += centered[s] * centered[s + l];
    acf[l - 1] = num / denom;
  }
  return acf;
}

Diagnostics diagnostics(const ChainOutput& output, int lags) {
  if (lags < 1) fail(ErrorCode::invalid_argument, "diagnostics: lags must be >= 1");
  if (output.n_retained < lags + 2)
    fail(ErrorCode::invalid_argument,
         "diagnostics: need at least lags + 2 retained draws");
  const int m = static_cast<int>(output.trace_names.size());
  Diagnostics d;
  d.trace_names = output.trace_names;
  d.acf.resize(m, lags);
  d.degenerate.assign(m, false);
  d.running_mean.resize(output.n_retained, m);
  for (int c = 0; c < m; ++c) {
    VectorXd tr = output.traces.col(c).head(output.n_retained);
    double mean = tr.mean();
    double var = (tr.array() - mean).square().sum();
    double acc = 0.0;
    for (int s = 0; s < output.n_retained; ++s) {
      acc += tr[s];
      d.running_mean(s, c) = acc / (s + 1);
    }
    if (var <= 0.0 || !(var > 1e-300)) {
      d.degenerate[c] = true;
      d.acf.row(c).setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      d.acf.row(c) = autocorrelation(tr, lags).transpose();
    }
  }
  return d;
}

}  // namespace panelsv
