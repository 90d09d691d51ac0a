#pragma once

#include <string>
#include <vector>

#include "panelsv/types.hpp"

namespace panelsv {

// Marginal conditional covariance Omega_t = Lambda Q_t Lambda' + Sigma_t with
// Q_t = diag(exp q_t) and Sigma_t = diag(exp h_t).
MatrixXd assemble_omega(const LoadingMatrix& loadings, const VectorXd& q_t,
                        const VectorXd& h_t);

// kN + Np - (p^2+p)/2 + 2(N+p).
long total_parameter_count(const ModelDims& dims);

// Empty vector iff every invariant holds (identification, stationarity,
// positivity, finiteness, indicator range).
std::vector<std::string> validate_state(const ParameterState& state,
                                        const ModelDims& dims);

// Log density of r_t given the state at period t; factors are conditioned
// on, so the covariance is the diagonal Sigma_t.
double conditional_loglik_t(const VectorXd& r_t, const MatrixXd& x_t,
                            const ParameterState& state, int t);

}  // namespace panelsv
