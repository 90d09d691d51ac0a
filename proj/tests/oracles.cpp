#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracles {

ConditionalGaussian condition(const VectorXd& mean_x, const MatrixXd& cov_xx,
                              const MatrixXd& cov_xy, const VectorXd& mean_y,
                              const MatrixXd& cov_yy, const VectorXd& y) {
  Eigen::LDLT<MatrixXd> ldlt(cov_yy);
  MatrixXd gain = ldlt.solve(cov_xy.transpose()).transpose();
  ConditionalGaussian out;
  out.mean = mean_x + gain * (y - mean_y);
  out.cov = cov_xx - gain * cov_xy.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

namespace {

// Joint moments of the stacked state x (d*T) and observations z (d*T).
struct Joint {
  VectorXd mean_x, mean_z;
  MatrixXd cov_xx, cov_xz, cov_zz;
};

Joint joint_moments(const SsmSpec& spec) {
  const int d = spec.dim(), t = spec.periods(), n = d * t;
  // State mean/cov by propagating the AR recursions; dimensions independent.
  VectorXd mean_x = VectorXd::Zero(n);
  MatrixXd cov_xx = MatrixXd::Zero(n, n);
  for (int i = 0; i < d; ++i) {
    VectorXd m(t);
    MatrixXd v = MatrixXd::Zero(t, t);
    m[0] = spec.init_mean[i];
    v(0, 0) = spec.init_var[i];
    for (int s = 1; s < t; ++s) {
      m[s] = spec.a0[i] + spec.a1[i] * m[s - 1];
      for (int u = 0; u < s; ++u) v(s, u) = v(u, s) = spec.a1[i] * v(u, s - 1);
      v(s, s) = spec.a1[i] * spec.a1[i] * v(s - 1, s - 1) + spec.q[i];
    }
    for (int s = 0; s < t; ++s) {
      mean_x[i + d * s] = m[s];
      for (int u = 0; u < t; ++u) cov_xx(i + d * s, i + d * u) = v(s, u);
    }
  }
  Joint j;
  j.mean_x = mean_x;
  j.cov_xx = cov_xx;
  // z = c + x + e with independent per-cell noise.
  j.mean_z = mean_x;
  for (int s = 0; s < t; ++s)
    for (int i = 0; i < d; ++i) j.mean_z[i + d * s] += spec.c(i, s);
  j.cov_xz = cov_xx;
  j.cov_zz = cov_xx;
  for (int s = 0; s < t; ++s)
    for (int i = 0; i < d; ++i)
      j.cov_zz(i + d * s, i + d * s) += spec.obs_var(i, s);
  return j;
}

}  // namespace

ConditionalGaussian dense_smoother(const SsmSpec& spec) {
  Joint j = joint_moments(spec);
  const int d = spec.dim(), t = spec.periods();
  VectorXd zvec(d * t);
  for (int s = 0; s < t; ++s)
    for (int i = 0; i < d; ++i) zvec[i + d * s] = spec.z(i, s);
  return condition(j.mean_x, j.cov_xx, j.cov_xz, j.mean_z, j.cov_zz, zvec);
}

DenseFiltered dense_filter(const SsmSpec& spec) {
  Joint j = joint_moments(spec);
  const int d = spec.dim(), t = spec.periods();
  VectorXd zvec(d * t);
  for (int s = 0; s < t; ++s)
    for (int i = 0; i < d; ++i) zvec[i + d * s] = spec.z(i, s);
  DenseFiltered out;
  out.mean.resize(d, t);
  out.var.resize(d, t);
  for (int s = 0; s < t; ++s) {
    const int nz = d * (s + 1);
    for (int i = 0; i < d; ++i) {
      const int xi = i + d * s;
      MatrixXd cov_xy = j.cov_xz.row(xi).head(nz);
      ConditionalGaussian cg = condition(
          j.mean_x.segment(xi, 1), j.cov_xx.block(xi, xi, 1, 1), cov_xy,
          j.mean_z.head(nz), j.cov_zz.topLeftCorner(nz, nz), zvec.head(nz));
      out.mean(i, s) = cg.mean[0];
      out.var(i, s) = cg.cov(0, 0);
    }
  }
  return out;
}

DenseFiltered blocked_kalman_filter(const SsmSpec& spec) {
  const int d = spec.dim(), t = spec.periods();
  MatrixXd a = spec.a1.asDiagonal();
  MatrixXd qcov = spec.q.asDiagonal();
  VectorXd m = spec.init_mean;
  MatrixXd pcov = spec.init_var.asDiagonal();
  DenseFiltered out;
  out.mean.resize(d, t);
  out.var.resize(d, t);
  for (int s = 0; s < t; ++s) {
    VectorXd mp = s == 0 ? m : VectorXd(spec.a0 + a * m);
    MatrixXd pp = s == 0 ? pcov : MatrixXd(a * pcov * a.transpose() + qcov);
    MatrixXd rk = spec.obs_var.col(s).asDiagonal();
    MatrixXd sk = pp + rk;
    MatrixXd gain = pp * sk.inverse();
    VectorXd innov = spec.z.col(s) - spec.c.col(s) - mp;
    m = mp + gain * innov;
    pcov = (MatrixXd::Identity(d, d) - gain) * pp;
    out.mean.col(s) = m;
    out.var.col(s) = pcov.diagonal();
  }
  return out;
}

double dense_mvn_logpdf(const VectorXd& x, const VectorXd& mean,
                        const MatrixXd& cov) {
  const int n = static_cast<int>(x.size());
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("dense_mvn_logpdf: covariance not SPD");
  VectorXd w = llt.matrixL().solve(x - mean);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (n * std::log(2.0 * M_PI) + logdet + w.squaredNorm());
}

double reg_incomplete_gamma(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("reg_incomplete_gamma");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    // series expansion
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // continued fraction for Q(a,x)
  double b = x + 1.0 - a, c = 1e300, dd = 1.0 / b, h = dd;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    dd = an * dd + b;
    if (std::fabs(dd) < 1e-300) dd = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    dd = 1.0 / dd;
    double del = dd * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

double gamma_cdf(double shape, double rate, double x) {
  if (x <= 0.0) return 0.0;
  return reg_incomplete_gamma(shape, rate * x);
}

double chi2_sf(double dof, double x) {
  return 1.0 - reg_incomplete_gamma(0.5 * dof, 0.5 * x);
}

double chi2_gof_pvalue(const std::vector<double>& sample, int bins,
                       const std::function<double(double)>& cdf) {
  const int n = static_cast<int>(sample.size());
  std::vector<int> counts(bins, 0);
  for (double v : sample) {
    double u = cdf(v);
    int b = std::min(bins - 1, std::max(0, static_cast<int>(u * bins)));
    counts[b] += 1;
  }
  const double expected = static_cast<double>(n) / bins;
  double stat = 0.0;
  for (int b = 0; b < bins; ++b) {
    double diff = counts[b] - expected;
    stat += diff * diff / expected;
  }
  return chi2_sf(bins - 1, stat);
}

double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    ks = std::max(ks, std::fabs(f - (i + 1) / n));
    ks = std::max(ks, std::fabs(f - i / n));
  }
  return ks;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracles
