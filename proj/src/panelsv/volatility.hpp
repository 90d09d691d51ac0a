#pragma once

#include <array>
#include <utility>

#include "panelsv/types.hpp"

namespace panelsv {

class Rng;

struct MixtureComponent {
  double weight;
  double mean;
  double variance;
};

// Seven-component normal mixture approximating the log chi-squared(1)
// distribution of log-squared Gaussian noise.
using MixtureTable = std::array<MixtureComponent, 7>;
const MixtureTable& log_chisq_mixture();
double mixture_mean(const MixtureTable& table);
double mixture_variance(const MixtureTable& table);
double mixture_cdf(const MixtureTable& table, double x);

// Linearized observation system over the stacked (N+p)-dimensional
// log-volatility state: rows 1..N are idiosyncratic residuals, rows
// N+1..N+p are factors.
struct StateSpaceView {
  MatrixXd z;        // (N+p) x T, log(squared series + offset)
  MatrixXd c;        // (N+p) x T, selected mixture component means
  MatrixXd sigma_e;  // (N+p) x T, selected component variances
  VectorXd alpha0;   // state intercepts
  VectorXd alpha1;   // state slopes
  VectorXd sigma_nu; // state innovation variances
  VectorXd offsets;  // per-series offsets used in the log transform

  int n_series() const { return static_cast<int>(z.rows()); }
  int n_periods() const { return static_cast<int>(z.cols()); }
};

// Builds z, the AR stacking and the offsets from the current residuals and
// factor values; c and sigma_e are filled from the state's current mixture
// indicators.
StateSpaceView build_state_space(const PanelDataset& dataset,
                                 const ParameterState& state,
                                 double offset_scale = 1e-6);

// Indicator draw per cell with probability proportional to
// weight_s * N(z - path | mean_s, var_s); entries in 1..7.
MatrixXi sample_mixture_indicators(const MatrixXd& z_minus_path,
                                   const MixtureTable& table, Rng& rng);

// Applies the indicator selection to the view's c and sigma_e.
void apply_indicators(StateSpaceView& view, const MatrixXi& indicators,
                      const MixtureTable& table);

// Filtered moments; with diagonal observation and innovation covariances the
// multivariate filter decomposes into independent univariate recursions, so
// D_t is stored by its diagonal.
struct FilterMoments {
  MatrixXd m;  // (N+p) x T filtered means
  MatrixXd d;  // (N+p) x T filtered variances (diagonal of D_t)
};

FilterMoments forward_filter(const StateSpaceView& view,
                             const VectorXd& init_mean,
                             const VectorXd& init_var);

// Backward sampling of the full path; the first N rows become h, the last
// p rows become q.
MatrixXd backward_sample(const FilterMoments& moments,
                         const StateSpaceView& view, Rng& rng);

// Conjugate normal-inverse-gamma AR(1) regression per series with a
// stationarity rejection step.
struct VolCoeffsDraw {
  VolCoeffs coeffs;
  VectorXd slope_mean;  // posterior mean of each slope (proposal input)
  VectorXd slope_var;   // posterior variance of each slope
};

VolCoeffsDraw sample_vol_coeffs(const LogVolPaths& paths,
                                const VolatilityPrior& prior, Rng& rng,
                                int stationarity_retry_budget = 1000);

}  // namespace panelsv
