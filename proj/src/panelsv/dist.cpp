#include "panelsv/dist.hpp"

#include <cmath>

#include "panelsv/common.hpp"

namespace panelsv {

Eigen::MatrixXd cholesky_spd(const Eigen::MatrixXd& m, const char* context) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, std::string(context) + ": matrix not SPD");
  return llt.matrixL();
}

Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         Rng& rng) {
  Eigen::MatrixXd L = cholesky_spd(cov, "mvn_draw");
  return mean + L * rng.normal_vector(static_cast<int>(mean.size()));
}

Eigen::VectorXd mvt_draw(const Eigen::VectorXd& loc, const Eigen::MatrixXd& scale,
                         double dof, Rng& rng) {
  Eigen::MatrixXd L = cholesky_spd(scale, "mvt_draw");
  double g = rng.chi_squared(dof);
  return loc + L * rng.normal_vector(static_cast<int>(loc.size())) *
                   std::sqrt(dof / g);
}

double mvt_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& loc,
                  const Eigen::MatrixXd& scale, double dof) {
  const int d = static_cast<int>(x.size());
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "mvt_logpdf: scale not SPD");
  Eigen::VectorXd z = llt.matrixL().solve(x - loc);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  double quad = z.squaredNorm();
  return std::lgamma(0.5 * (dof + d)) - std::lgamma(0.5 * dof) -
         0.5 * d * std::log(dof * M_PI) - 0.5 * logdet -
         0.5 * (dof + d) * std::log1p(quad / dof);
}

Eigen::MatrixXd wishart_draw(double dof, const Eigen::MatrixXd& scale, Rng& rng) {
  const int d = static_cast<int>(scale.rows());
  if (dof <= d - 1)
    fail(ErrorCode::invalid_argument, "wishart_draw: dof must exceed dim - 1");
  Eigen::MatrixXd L = cholesky_spd(scale, "wishart_draw");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  Eigen::MatrixXd la = L * a;
  return la * la.transpose();
}

}  // namespace panelsv
