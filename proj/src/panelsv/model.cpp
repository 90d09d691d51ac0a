#include "panelsv/model.hpp"

#include <cmath>

#include "panelsv/common.hpp"
#include "panelsv/rng.hpp"

namespace panelsv {

MatrixXd assemble_omega(const LoadingMatrix& loadings, const VectorXd& q_t,
                        const VectorXd& h_t) {
  const auto& lam = loadings.lambda;
  if (lam.cols() != q_t.size() || lam.rows() != h_t.size())
    fail(ErrorCode::dimension, "assemble_omega: dimension mismatch");
  MatrixXd omega = lam * q_t.array().exp().matrix().asDiagonal() * lam.transpose();
  omega.diagonal() += h_t.array().exp().matrix();
  return 0.5 * (omega + omega.transpose());
}

long total_parameter_count(const ModelDims& dims) {
  dims.validate();
  const long n = dims.n_individuals, k = dims.n_covariates, p = dims.n_factors;
  return k * n + n * p - (p * p + p) / 2 + 2 * (n + p);
}

namespace {

void check_finite(const MatrixXd& m, const std::string& name,
                  std::vector<std::string>& out) {
  if (!m.allFinite()) out.push_back(name + ": non-finite entry");
}

}  // namespace

std::vector<std::string> validate_state(const ParameterState& state,
                                        const ModelDims& dims) {
  std::vector<std::string> v;
  const int n = dims.n_individuals, t = dims.n_periods, k = dims.n_covariates,
            p = dims.n_factors;

  auto shape = [&](long rows, long cols, long er, long ec, const char* name) {
    if (rows != er || cols != ec) {
      v.push_back(std::string(name) + ": shape mismatch");
      return false;
    }
    return true;
  };

  if (shape(state.coeffs.beta.rows(), state.coeffs.beta.cols(), n, k, "beta"))
    check_finite(state.coeffs.beta, "beta", v);

  const auto& lam = state.loadings.lambda;
  if (shape(lam.rows(), lam.cols(), n, p, "lambda")) {
    check_finite(lam, "lambda", v);
    for (int i = 0; i < std::min(n, p); ++i)
      for (int j = i + 1; j < p; ++j)
        if (lam(i, j) != 0.0)
          v.push_back("lambda: upper-triangle nonzero at (" +
                      std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    for (int j = 0; j < p; ++j)
      if (!(lam(j, j) > 0.0))
        v.push_back("lambda: nonpositive diagonal at " + std::to_string(j + 1));
  }

  if (shape(state.factors.f.rows(), state.factors.f.cols(), p, t, "f"))
    check_finite(state.factors.f, "f", v);
  if (shape(state.logvols.h.rows(), state.logvols.h.cols(), n, t, "h"))
    check_finite(state.logvols.h, "h", v);
  if (shape(state.logvols.q.rows(), state.logvols.q.cols(), p, t, "q"))
    check_finite(state.logvols.q, "q", v);

  const auto& vc = state.volcoeffs;
  if (vc.alpha0.size() != n || vc.alpha1.size() != n || vc.sigma2_v.size() != n ||
      vc.phi0.size() != p || vc.phi1.size() != p || vc.sigma2_w.size() != p) {
    v.push_back("volcoeffs: shape mismatch");
  } else {
    for (int i = 0; i < n; ++i) {
      if (!(std::fabs(vc.alpha1[i]) < 1.0))
        v.push_back("volcoeffs: nonstationary AR coefficient alpha1[" +
                    std::to_string(i + 1) + "]");
      if (!(vc.sigma2_v[i] > 0.0))
        v.push_back("volcoeffs: nonpositive sigma2_v[" + std::to_string(i + 1) + "]");
    }
    for (int j = 0; j < p; ++j) {
      if (!(std::fabs(vc.phi1[j]) < 1.0))
        v.push_back("volcoeffs: nonstationary AR coefficient phi1[" +
                    std::to_string(j + 1) + "]");
      if (!(vc.sigma2_w[j] > 0.0))
        v.push_back("volcoeffs: nonpositive sigma2_w[" + std::to_string(j + 1) + "]");
    }
  }

  const auto& sc = state.scales;
  if (sc.sigma2_err.size() != n || sc.vartheta.size() != n) {
    v.push_back("scales: shape mismatch");
  } else {
    for (int i = 0; i < n; ++i) {
      if (!(sc.sigma2_err[i] > 0.0))
        v.push_back("scales: nonpositive sigma2_err[" + std::to_string(i + 1) + "]");
      if (!(sc.vartheta[i] > 0.0))
        v.push_back("scales: nonpositive vartheta[" + std::to_string(i + 1) + "]");
    }
  }
  if (!(sc.delta_sigma > 0.0)) v.push_back("scales: nonpositive delta_sigma");

  const auto& mi = state.mixture_indicators;
  if (shape(mi.rows(), mi.cols(), n + p, t, "mixture_indicators")) {
    if ((mi.array() < 1).any() || (mi.array() > 7).any())
      v.push_back("mixture_indicators: entry outside 1..7");
  }
  return v;
}

double conditional_loglik_t(const VectorXd& r_t, const MatrixXd& x_t,
                            const ParameterState& state, int t) {
  const int n = static_cast<int>(r_t.size());
  if (x_t.rows() != n || x_t.cols() != state.coeffs.beta.cols())
    fail(ErrorCode::dimension, "conditional_loglik_t: covariate shape mismatch");
  if (t < 0 || t >= state.logvols.h.cols())
    fail(ErrorCode::invalid_argument, "conditional_loglik_t: period out of range");
  if (!r_t.allFinite() || !x_t.allFinite())
    fail(ErrorCode::invalid_argument, "conditional_loglik_t: non-finite input");

  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    double mean = state.coeffs.beta.row(i).dot(x_t.row(i));
    if (state.loadings.lambda.cols() > 0)
      mean += state.loadings.lambda.row(i).dot(state.factors.f.col(t));
    ll += normal_logpdf(r_t[i], mean, std::exp(state.logvols.h(i, t)));
  }
  if (!std::isfinite(ll))
    fail(ErrorCode::numeric, "conditional_loglik_t: non-finite log density");
  return ll;
}

}  // namespace panelsv
