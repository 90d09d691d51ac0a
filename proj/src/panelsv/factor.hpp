#pragma once

#include <optional>
#include <utility>

#include "panelsv/types.hpp"

namespace panelsv {

class Rng;

// Conjugate draw of loading row i (0-based) given factors and volatilities.
// Rows i < p are truncated to a positive diagonal element with the strict
// upper triangle pinned at zero; rows i >= p are unconstrained.
VectorXd sample_loading_row(int i, const PanelDataset& dataset,
                            const ParameterState& state,
                            const LoadingPrior& prior, Rng& rng,
                            int truncation_retry_budget = 1000);

// IG((nu_lambda + T)/2, (nu_lambda s^2 + delta_lambda + rss)/2) where rss is
// the per-period mean squared factor-decomposition residual summed over t.
double sample_sigma_lambda(const PanelDataset& dataset,
                           const ParameterState& state,
                           const LoadingPrior& prior, Rng& rng);

// f_t ~ N(G^{-1} Lambda' Sigma_t^{-1} rtilde_t, G^{-1}) with
// G = I_p + Lambda' Sigma_t^{-1} Lambda and rtilde the beta-adjusted return.
VectorXd sample_factors_t(int t, const PanelDataset& dataset,
                          const ParameterState& state, Rng& rng);

// Log of prod_t N(rtilde_t; 0, Lambda Q_t Lambda' + Sigma_t) as a function of
// the free elements of loading row i, all other rows fixed. Evaluated through
// a rank-one reduction; `free` has length min(i+1, p).
class RowMarginalLoglik {
 public:
  RowMarginalLoglik(int i, const PanelDataset& dataset,
                    const ParameterState& state);
  double operator()(const VectorXd& free) const;
  int free_count() const { return m_; }

 private:
  int m_;
  std::vector<MatrixXd> b_inv_;   // per-period inverse of the row-deleted core
  std::vector<VectorXd> g_;       // B^{-1} d
  VectorXd d_quad_;               // d' B^{-1} d
  VectorXd s_;                    // exp(-h_it)
  VectorXd r_;                    // residual target for row i
};

// Metropolis-Hastings refresh of row i's free elements with a multivariate-t
// proposal located by a few Newton steps on the marginal log likelihood.
// Returns the (possibly unchanged) row and whether the proposal was accepted;
// nullopt when no SPD proposal scale could be built (Gibbs-only fallback).
struct LoadingRefreshResult {
  VectorXd row;
  bool accepted = false;
  bool proposal_built = false;
};

LoadingRefreshResult refresh_loading_row_mh(int i, const PanelDataset& dataset,
                                            const ParameterState& state,
                                            const LoadingPrior& prior,
                                            Rng& rng, int newton_steps = 5);

// Mean squared residual V(k) after extracting k principal components from
// the per-individual demeaned return matrix, for k = 0..p_max.
std::vector<double> icp_residual_variances(const PanelDataset& dataset,
                                           int p_max);

// Bai-Ng ICp1 over k = 0..p_max on the per-individual demeaned return matrix.
int select_num_factors_icp(const PanelDataset& dataset, int p_max);

}  // namespace panelsv
