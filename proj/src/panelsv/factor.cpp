#include "panelsv/factor.hpp"

#include <cmath>

#include "panelsv/common.hpp"
#include "panelsv/dist.hpp"
#include "panelsv/rng.hpp"

namespace panelsv {

namespace {

// Residual target r_it - beta_i'x_it for one row.
VectorXd beta_adjusted_row(int i, const PanelDataset& dataset,
                           const ParameterState& state) {
  const int t = dataset.n_periods();
  VectorXd out(t);
  for (int s = 0; s < t; ++s)
    out[s] = dataset.returns(i, s) -
             state.coeffs.beta.row(i).dot(dataset.covariates[i].row(s));
  return out;
}

// Conjugate posterior moments of row i's free elements given the factors.
void loading_row_moments(int i, const PanelDataset& dataset,
                         const ParameterState& state, const LoadingPrior& prior,
                         VectorXd* mean, MatrixXd* cov) {
  const int p = static_cast<int>(state.loadings.lambda.cols());
  const int t = dataset.n_periods();
  const int m = std::min(i + 1, p);
  VectorXd target = beta_adjusted_row(i, dataset, state);
  MatrixXd prec = MatrixXd::Identity(m, m) / prior.c_prior_var;
  VectorXd rhs = VectorXd::Zero(m);
  for (int s = 0; s < t; ++s) {
    double w = std::exp(-state.logvols.h(i, s));
    VectorXd fm = state.factors.f.col(s).head(m);
    prec.selfadjointView<Eigen::Lower>().rankUpdate(fm, w);
    rhs += w * target[s] * fm;
  }
  prec = prec.selfadjointView<Eigen::Lower>();
  Eigen::LLT<MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "sample_loading_row: posterior precision not SPD");
  *mean = llt.solve(rhs);
  *cov = llt.solve(MatrixXd::Identity(m, m));
}

}  // namespace

VectorXd sample_loading_row(int i, const PanelDataset& dataset,
                            const ParameterState& state,
                            const LoadingPrior& prior, Rng& rng,
                            int truncation_retry_budget) {
  const int p = static_cast<int>(state.loadings.lambda.cols());
  const int m = std::min(i + 1, p);
  if (m == 0) return VectorXd();

  VectorXd mean;
  MatrixXd cov;
  loading_row_moments(i, dataset, state, prior, &mean, &cov);

  if (i >= p) return mvn_draw(mean, cov, rng);

  // The truncation I(lambda_ii > 0) applies to one coordinate: draw it from
  // its truncated marginal, then the rest from the Gaussian conditional.
  const int d = m - 1;  // index of the diagonal element within the free vector
  double sd = std::sqrt(cov(d, d));
  double lam_ii =
      rng.truncated_normal_lower(mean[d], sd, 0.0, truncation_retry_budget);
  VectorXd row(m);
  row[d] = lam_ii;
  if (d > 0) {
    VectorXd c12 = cov.col(d).head(d);
    VectorXd cond_mean =
        mean.head(d) + c12 * ((lam_ii - mean[d]) / cov(d, d));
    MatrixXd cond_cov =
        cov.topLeftCorner(d, d) - c12 * c12.transpose() / cov(d, d);
    cond_cov = 0.5 * (cond_cov + cond_cov.transpose());
    row.head(d) = mvn_draw(cond_mean, cond_cov, rng);
  }
  return row;
}

double sample_sigma_lambda(const PanelDataset& dataset,
                           const ParameterState& state,
                           const LoadingPrior& prior, Rng& rng) {
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  double rss = 0.0;
  for (int s = 0; s < t; ++s) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double e = dataset.returns(i, s) -
                 state.coeffs.beta.row(i).dot(dataset.covariates[i].row(s));
      if (p > 0) e -= state.loadings.lambda.row(i).dot(state.factors.f.col(s));
      acc += e * e;
    }
    rss += acc / n;  // one per-period mean square per t, pairing with the T/2 shape
  }
  double shape = 0.5 * (prior.nu_lambda + t);
  double scale = 0.5 * (prior.nu_lambda * prior.s2_lambda + prior.delta_lambda + rss);
  if (!(scale > 0.0))
    fail(ErrorCode::numeric, "sample_sigma_lambda: nonpositive scale");
  return rng.inv_gamma(shape, scale);
}

VectorXd sample_factors_t(int t, const PanelDataset& dataset,
                          const ParameterState& state, Rng& rng) {
  const int n = dataset.n_individuals();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  if (p == 0) return VectorXd();
  MatrixXd g = MatrixXd::Identity(p, p);
  VectorXd rhs = VectorXd::Zero(p);
  for (int i = 0; i < n; ++i) {
    double w = std::exp(-state.logvols.h(i, t));
    double target = dataset.returns(i, t) -
                    state.coeffs.beta.row(i).dot(dataset.covariates[i].row(t));
    VectorXd li = state.loadings.lambda.row(i).transpose();
    g.selfadjointView<Eigen::Lower>().rankUpdate(li, w);
    rhs += w * target * li;
  }
  g = g.selfadjointView<Eigen::Lower>();
  Eigen::LLT<MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "sample_factors_t: singular G");
  VectorXd mean = llt.solve(rhs);
  VectorXd z = llt.matrixL().transpose().solve(rng.normal_vector(p));
  return mean + z;
}

// ---------------------------------------------------------------------------
// Marginal likelihood of one loading row with the factors integrated out
// ---------------------------------------------------------------------------

RowMarginalLoglik::RowMarginalLoglik(int i, const PanelDataset& dataset,
                                     const ParameterState& state) {
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  const int p = static_cast<int>(state.loadings.lambda.cols());
  m_ = std::min(i + 1, p);
  b_inv_.resize(t);
  g_.resize(t);
  d_quad_.resize(t);
  s_.resize(t);
  r_.resize(t);

  // Residual targets for every row (beta-adjusted).
  MatrixXd rt(n, t);
  for (int j = 0; j < n; ++j) rt.row(j) = beta_adjusted_row(j, dataset, state);
  r_ = rt.row(i);

  for (int s = 0; s < t; ++s) {
    s_[s] = std::exp(-state.logvols.h(i, s));
    MatrixXd b = state.logvols.q.col(s).array().exp().inverse().matrix().asDiagonal();
    VectorXd d = VectorXd::Zero(p);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double w = std::exp(-state.logvols.h(j, s));
      VectorXd lj = state.loadings.lambda.row(j).transpose();
      b.selfadjointView<Eigen::Lower>().rankUpdate(lj, w);
      d += w * rt(j, s) * lj;
    }
    b = b.selfadjointView<Eigen::Lower>();
    Eigen::LDLT<MatrixXd> ldlt(b);
    if (ldlt.info() != Eigen::Success)
      fail(ErrorCode::numeric, "row marginal: core matrix not factorizable");
    b_inv_[s] = ldlt.solve(MatrixXd::Identity(p, p));
    g_[s] = b_inv_[s] * d;
    d_quad_[s] = d.dot(g_[s]);
  }
}

double RowMarginalLoglik::operator()(const VectorXd& free) const {
  const int p = static_cast<int>(b_inv_[0].rows());
  VectorXd lam = VectorXd::Zero(p);
  lam.head(m_) = free;
  double ll = 0.0;
  for (std::size_t s = 0; s < b_inv_.size(); ++s) {
    VectorXd w = b_inv_[s] * lam;
    double a = lam.dot(w);
    double gl = g_[s].dot(lam);
    double sr = s_[s] * r_[s];
    double denom = 1.0 + s_[s] * a;
    if (!(denom > 0.0)) return -std::numeric_limits<double>::infinity();
    double quad = d_quad_[s] + 2.0 * sr * gl + sr * sr * a;
    double corr = gl + sr * a;
    quad -= s_[s] * corr * corr / denom;
    ll += -0.5 * (std::log(denom) - quad);
  }
  return ll;
}

LoadingRefreshResult refresh_loading_row_mh(int i, const PanelDataset& dataset,
                                            const ParameterState& state,
                                            const LoadingPrior& prior, Rng& rng,
                                            int newton_steps) {
  const int p = static_cast<int>(state.loadings.lambda.cols());
  const int m = std::min(i + 1, p);
  LoadingRefreshResult res;
  res.row = state.loadings.lambda.row(i).head(m);
  if (m == 0) return res;

  RowMarginalLoglik loglik(i, dataset, state);
  const bool constrained = i < p;

  auto log_prior = [&](const VectorXd& v) {
    if (constrained && !(v[m - 1] > 0.0))
      return -std::numeric_limits<double>::infinity();
    return -0.5 * v.squaredNorm() / prior.c_prior_var;
  };

  // Newton iterations on the marginal log likelihood with central finite
  // differences; the proposal scale is the inverse negative Hessian. The
  // start point is the conditional posterior mean given the factors, which
  // does not depend on the row's current value, so the resulting proposal
  // is a genuine independence proposal and the acceptance ratio below is
  // exact.
  VectorXd x;
  MatrixXd start_cov;
  loading_row_moments(i, dataset, state, prior, &x, &start_cov);
  if (constrained && !(x[m - 1] > 0.0)) x[m - 1] = 1e-3;
  double fx = loglik(x);
  const double step = 1e-4;
  MatrixXd hess(m, m);
  VectorXd grad(m);
  for (int it = 0; it < newton_steps; ++it) {
    for (int a = 0; a < m; ++a) {
      VectorXd e = VectorXd::Zero(m);
      e[a] = step;
      double fp = loglik(x + e), fm2 = loglik(x - e);
      grad[a] = (fp - fm2) / (2.0 * step);
      hess(a, a) = (fp - 2.0 * fx + fm2) / (step * step);
      for (int b = 0; b < a; ++b) {
        VectorXd eb = VectorXd::Zero(m);
        eb[b] = step;
        double fpp = loglik(x + e + eb), fpm = loglik(x + e - eb);
        double fmp = loglik(x - e + eb), fmm = loglik(x - e - eb);
        hess(a, b) = hess(b, a) = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
      }
    }
    Eigen::LLT<MatrixXd> neg(-hess);
    if (neg.info() != Eigen::Success) break;  // saddle or flat; stop climbing
    VectorXd delta = neg.solve(grad);
    double scale_back = 1.0;
    for (int half = 0; half < 6; ++half) {
      VectorXd cand = x + scale_back * delta;
      if (constrained && !(cand[m - 1] > 0.0)) {
        scale_back *= 0.5;
        continue;
      }
      double fc = loglik(cand);
      if (fc >= fx - 1e-9) {
        x = cand;
        fx = fc;
        break;
      }
      scale_back *= 0.5;
    }
  }

  Eigen::LLT<MatrixXd> neg(-hess);
  if (neg.info() != Eigen::Success) return res;  // fall back to Gibbs-only sweep
  MatrixXd xi = neg.solve(MatrixXd::Identity(m, m));
  xi = 0.5 * (xi + xi.transpose());
  Eigen::LLT<MatrixXd> xill(xi);
  if (xill.info() != Eigen::Success) return res;
  res.proposal_built = true;

  VectorXd cand = mvt_draw(x, xi, prior.t_dof, rng);
  double lp_cand = log_prior(cand);
  if (!std::isfinite(lp_cand)) return res;  // zero prior mass: reject
  double num = lp_cand + loglik(cand) + mvt_logpdf(res.row, x, xi, prior.t_dof);
  double den = log_prior(res.row) + loglik(res.row) +
               mvt_logpdf(cand, x, xi, prior.t_dof);
  if (num - den >= 0.0 || std::log(rng.uniform()) < num - den) {
    res.row = cand;
    res.accepted = true;
  }
  return res;
}

std::vector<double> icp_residual_variances(const PanelDataset& dataset,
                                           int p_max) {
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  if (p_max < 0 || p_max >= std::min(n, t))
    fail(ErrorCode::invalid_argument, "select_num_factors_icp: need p_max < min(N,T)");
  MatrixXd centered = dataset.returns;
  centered.colwise() -= dataset.returns.rowwise().mean();
  MatrixXd gram = centered * centered.transpose();  // N x N
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::numeric, "select_num_factors_icp: eigensolver failed");
  VectorXd ev = es.eigenvalues().reverse();  // descending
  double total = gram.trace();
  const double cells = static_cast<double>(n) * t;
  if (!(total / cells > 1e-300))
    fail(ErrorCode::invalid_argument,
         "select_num_factors_icp: rank-deficient (constant) return matrix");
  std::vector<double> v(p_max + 1);
  double removed = 0.0;
  for (int kf = 0; kf <= p_max; ++kf) {
    if (kf > 0) removed += ev[kf - 1];
    v[kf] = std::max(total - removed, 0.0) / cells;
  }
  return v;
}

int select_num_factors_icp(const PanelDataset& dataset, int p_max) {
  const int n = dataset.n_individuals(), t = dataset.n_periods();
  std::vector<double> v = icp_residual_variances(dataset, p_max);
  const double cells = static_cast<double>(n) * t;
  const double penalty = (n + t) / cells * std::log(cells / (n + t));
  // Residuals at roundoff level count as an exact fit; without the floor a
  // noiseless rank-k dataset would run past k on eigenvalue dust.
  const double floor = 1e-12 * v[0];
  int best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int kf = 0; kf <= p_max; ++kf) {
    double ic =
        (v[kf] > floor ? std::log(v[kf]) : -std::numeric_limits<double>::infinity()) +
        kf * penalty;
    if (ic < best) {
      best = ic;
      best_k = kf;
    }
  }
  return best_k;
}

}  // namespace panelsv
