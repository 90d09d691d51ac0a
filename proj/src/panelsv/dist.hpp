#pragma once

#include <Eigen/Dense>

#include "panelsv/rng.hpp"

namespace panelsv {

// Draw from N(mean, cov); cov must be SPD.
Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         Rng& rng);

// Multivariate t with location, SPD scale matrix and dof.
Eigen::VectorXd mvt_draw(const Eigen::VectorXd& loc, const Eigen::MatrixXd& scale,
                         double dof, Rng& rng);
double mvt_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& loc,
                  const Eigen::MatrixXd& scale, double dof);

// Wishart(dof, scale) via Bartlett decomposition; E[W] = dof * scale.
Eigen::MatrixXd wishart_draw(double dof, const Eigen::MatrixXd& scale, Rng& rng);

// Cholesky factor with an SPD check; throws ErrorCode::numeric on failure.
Eigen::MatrixXd cholesky_spd(const Eigen::MatrixXd& m, const char* context);

}  // namespace panelsv
