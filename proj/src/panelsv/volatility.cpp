#include "panelsv/volatility.hpp"

#include <cmath>

#include "panelsv/common.hpp"
#include "panelsv/rng.hpp"

namespace panelsv {

const MixtureTable& log_chisq_mixture() {
  // Kim, Shephard & Chib (1998) constants as cited by Chib et al. (2002);
  // component means carry the -1.2704 centering so the mixture mean matches
  // E[log chi2_1] directly.
  static const MixtureTable table = {{
      {0.00730, -11.40039, 5.79596},
      {0.10556, -5.24321, 2.61369},
      {0.00002, -9.83726, 5.17950},
      {0.04395, 1.50746, 0.16735},
      {0.34001, -0.65098, 0.64009},
      {0.24566, 0.52478, 0.34023},
      {0.25750, -2.35859, 1.26261},
  }};
  return table;
}

double mixture_mean(const MixtureTable& table) {
  double m = 0.0;
  for (const auto& c : table) m += c.weight * c.mean;
  return m;
}

double mixture_variance(const MixtureTable& table) {
  const double m = mixture_mean(table);
  double v = 0.0;
  for (const auto& c : table)
    v += c.weight * (c.variance + (c.mean - m) * (c.mean - m));
  return v;
}

double mixture_cdf(const MixtureTable& table, double x) {
  double f = 0.0;
  for (const auto& c : table)
    f += c.weight * normal_cdf((x - c.mean) / std::sqrt(c.variance));
  return f;
}

StateSpaceView build_state_space(const PanelDataset& dataset,
                                 const ParameterState& state,
                                 double offset_scale) {
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  const int np = n + p;

  MatrixXd series(np, t);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t; ++s) {
      double e = dataset.returns(i, s) -
                 state.coeffs.beta.row(i).dot(dataset.covariates[i].row(s));
      if (p > 0) e -= state.loadings.lambda.row(i).dot(state.factors.f.col(s));
      series(i, s) = e;
    }
  if (p > 0) series.bottomRows(p) = state.factors.f;

  StateSpaceView view;
  view.z.resize(np, t);
  view.offsets.resize(np);
  for (int i = 0; i < np; ++i) {
    double mean = series.row(i).mean();
    double var = (series.row(i).array() - mean).square().sum() / t;
    view.offsets[i] = std::max(offset_scale * var, 1e-100);
    view.z.row(i) =
        (series.row(i).array().square() + view.offsets[i]).log().matrix();
  }

  view.alpha0.resize(np);
  view.alpha1.resize(np);
  view.sigma_nu.resize(np);
  view.alpha0 << state.volcoeffs.alpha0, state.volcoeffs.phi0;
  view.alpha1 << state.volcoeffs.alpha1, state.volcoeffs.phi1;
  view.sigma_nu << state.volcoeffs.sigma2_v, state.volcoeffs.sigma2_w;

  apply_indicators(view, state.mixture_indicators, log_chisq_mixture());
  return view;
}

void apply_indicators(StateSpaceView& view, const MatrixXi& indicators,
                      const MixtureTable& table) {
  const int np = view.n_series(), t = view.n_periods();
  if (indicators.rows() != np || indicators.cols() != t)
    fail(ErrorCode::dimension, "apply_indicators: indicator shape mismatch");
  view.c.resize(np, t);
  view.sigma_e.resize(np, t);
  for (int i = 0; i < np; ++i)
    for (int s = 0; s < t; ++s) {
      const auto& comp = table[indicators(i, s) - 1];
      view.c(i, s) = comp.mean;
      view.sigma_e(i, s) = comp.variance;
    }
}

MatrixXi sample_mixture_indicators(const MatrixXd& z_minus_path,
                                   const MixtureTable& table, Rng& rng) {
  MatrixXi out(z_minus_path.rows(), z_minus_path.cols());
  std::array<double, 7> w;
  for (int i = 0; i < z_minus_path.rows(); ++i)
    for (int s = 0; s < z_minus_path.cols(); ++s) {
      const double e = z_minus_path(i, s);
      double wmax = -std::numeric_limits<double>::infinity();
      std::array<double, 7> logw;
      for (int c = 0; c < 7; ++c) {
        const auto& comp = table[c];
        double d = e - comp.mean;
        logw[c] = std::log(comp.weight) - 0.5 * std::log(comp.variance) -
                  0.5 * d * d / comp.variance;
        wmax = std::max(wmax, logw[c]);
      }
      for (int c = 0; c < 7; ++c) w[c] = std::exp(logw[c] - wmax);
      out(i, s) = rng.categorical(w) + 1;
    }
  return out;
}

FilterMoments forward_filter(const StateSpaceView& view,
                             const VectorXd& init_mean,
                             const VectorXd& init_var) {
  const int np = view.n_series(), t = view.n_periods();
  if (init_mean.size() != np || init_var.size() != np)
    fail(ErrorCode::dimension, "forward_filter: init moment length mismatch");
  FilterMoments out;
  out.m.resize(np, t);
  out.d.resize(np, t);
  for (int i = 0; i < np; ++i) {
    double mp = init_mean[i], pp = init_var[i];
    for (int s = 0; s < t; ++s) {
      if (s > 0) {
        mp = view.alpha0[i] + view.alpha1[i] * out.m(i, s - 1);
        pp = view.alpha1[i] * view.alpha1[i] * out.d(i, s - 1) + view.sigma_nu[i];
      }
      const double sv = pp + view.sigma_e(i, s);
      if (!(sv > 0.0))
        fail(ErrorCode::numeric, "forward_filter: nonpositive innovation variance at period " +
                                     std::to_string(s + 1));
      const double gain = pp / sv;
      out.m(i, s) = mp + gain * (view.z(i, s) - view.c(i, s) - mp);
      out.d(i, s) = (1.0 - gain) * pp;
      if (!(out.d(i, s) >= 0.0) || !std::isfinite(out.m(i, s)))
        fail(ErrorCode::numeric, "forward_filter: filter degenerated at period " +
                                     std::to_string(s + 1));
    }
  }
  return out;
}

MatrixXd backward_sample(const FilterMoments& moments,
                         const StateSpaceView& view, Rng& rng) {
  const int np = view.n_series(), t = view.n_periods();
  MatrixXd path(np, t);
  for (int i = 0; i < np; ++i) {
    path(i, t - 1) =
        moments.m(i, t - 1) + std::sqrt(moments.d(i, t - 1)) * rng.normal();
    const double a0 = view.alpha0[i], a1 = view.alpha1[i], s2 = view.sigma_nu[i];
    for (int s = t - 2; s >= 0; --s) {
      const double pt = moments.d(i, s);
      const double denom = a1 * a1 * pt + s2;
      double mean, var;
      if (denom > 0.0) {
        mean = moments.m(i, s) +
               pt * a1 * (path(i, s + 1) - a0 - a1 * moments.m(i, s)) / denom;
        var = pt * s2 / denom;
      } else {
        // Deterministic evolution with zero filtered variance.
        mean = moments.m(i, s);
        var = 0.0;
      }
      if (!(var >= 0.0))
        fail(ErrorCode::numeric, "backward_sample: negative conditional variance");
      path(i, s) = mean + std::sqrt(var) * rng.normal();
    }
  }
  return path;
}

VolCoeffsDraw sample_vol_coeffs(const LogVolPaths& paths,
                                const VolatilityPrior& prior, Rng& rng,
                                int stationarity_retry_budget) {
  const int n = static_cast<int>(paths.h.rows());
  const int p = static_cast<int>(paths.q.rows());
  const int t = static_cast<int>(paths.h.cols());
  if (t < 3) fail(ErrorCode::dimension, "sample_vol_coeffs: need T >= 3");

  VolCoeffsDraw out;
  out.coeffs.alpha0.resize(n);
  out.coeffs.alpha1.resize(n);
  out.coeffs.sigma2_v.resize(n);
  out.coeffs.phi0.resize(p);
  out.coeffs.phi1.resize(p);
  out.coeffs.sigma2_w.resize(p);
  out.slope_mean.resize(n + p);
  out.slope_var.resize(n + p);

  Eigen::Vector2d prior_mean(prior.coef_prior_mean_intercept,
                             prior.coef_prior_mean_slope);
  Eigen::Matrix2d prior_prec = Eigen::Matrix2d::Zero();
  if (prior.coef_prior_var_intercept > 0.0)
    prior_prec(0, 0) = 1.0 / prior.coef_prior_var_intercept;
  if (prior.coef_prior_var_slope > 0.0)
    prior_prec(1, 1) = 1.0 / prior.coef_prior_var_slope;

  auto draw_series = [&](const Eigen::Ref<const Eigen::RowVectorXd>& x, int idx,
                         double* a0, double* a1, double* s2out) {
    const int nobs = t - 1;
    Eigen::Matrix2d xtx = Eigen::Matrix2d::Zero();
    Eigen::Vector2d xty = Eigen::Vector2d::Zero();
    double yty = 0.0;
    for (int s = 1; s < t; ++s) {
      const double lag = x[s - 1], y = x[s];
      xtx(0, 0) += 1.0;
      xtx(0, 1) += lag;
      xtx(1, 1) += lag * lag;
      xty[0] += y;
      xty[1] += lag * y;
      yty += y * y;
    }
    xtx(1, 0) = xtx(0, 1);
    Eigen::Matrix2d post_prec = xtx + prior_prec;
    Eigen::Vector2d rhs = xty + prior_prec * prior_mean;
    Eigen::Matrix2d post_cov = post_prec.inverse();
    Eigen::Vector2d coef_mean = post_cov * rhs;
    double sse = yty + prior_mean.dot(prior_prec * prior_mean) -
                 coef_mean.dot(post_prec * coef_mean);
    sse = std::max(sse, 0.0);
    const double shape = 0.5 * (prior.nu_h + nobs);
    const double scale = 0.5 * (prior.nu_h * prior.s2_h + sse);

    Eigen::LLT<Eigen::Matrix2d> llt(post_cov);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::numeric,
           "sample_vol_coeffs: degenerate regression for series " +
               std::to_string(idx + 1));
    for (int attempt = 0; attempt < stationarity_retry_budget; ++attempt) {
      double s2 = rng.inv_gamma(shape, scale);
      Eigen::Vector2d z = llt.matrixL() * rng.normal_vector(2);
      Eigen::Vector2d coef = coef_mean + std::sqrt(s2) * z;
      if (std::fabs(coef[1]) < 1.0) {
        *a0 = coef[0];
        *a1 = coef[1];
        *s2out = s2;
        out.slope_mean[idx] = coef_mean[1];
        out.slope_var[idx] = scale / (shape - 1.0) * post_cov(1, 1);
        return;
      }
    }
    fail(ErrorCode::numeric,
         "sample_vol_coeffs: stationarity retry budget exhausted for series " +
             std::to_string(idx + 1));
  };

  for (int i = 0; i < n; ++i)
    draw_series(paths.h.row(i), i, &out.coeffs.alpha0[i], &out.coeffs.alpha1[i],
                &out.coeffs.sigma2_v[i]);
  for (int j = 0; j < p; ++j)
    draw_series(paths.q.row(j), n + j, &out.coeffs.phi0[j], &out.coeffs.phi1[j],
                &out.coeffs.sigma2_w[j]);
  return out;
}

}  // namespace panelsv
