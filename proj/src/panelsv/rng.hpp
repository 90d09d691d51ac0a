#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace panelsv {

// Deterministic random source for every sampler in the project.
//
// All variates are derived from the mt19937_64 stream through fixed,
// implementation-owned transforms (inverse-CDF normal, Marsaglia-Tsang
// gamma), so a seed fully determines every draw independently of the
// standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Raw engine output; used to derive identity-keyed substreams.
  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [2^-54, 1 - 2^-54]; never exactly 0 or 1 so inverse-CDF
  // transforms stay finite.
  double uniform();
  double uniform(double lo, double hi);

  double normal();  // standard normal via Wichura's PPND16
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, rate); mean = shape/rate.
  double gamma(double shape, double rate);
  // InvGamma(shape, scale); mean = scale/(shape-1) for shape > 1.
  double inv_gamma(double shape, double scale);
  double chi_squared(double dof) { return gamma(0.5 * dof, 0.5); }

  // Normal(mean, sd) conditioned on x > lower. Exact (inverse-CDF with an
  // exponential-rejection fallback deep in the tail).
  double truncated_normal_lower(double mean, double sd, double lower,
                                int retry_budget = 1000);

  // Index in [0, n) with probabilities proportional to weights[0..n).
  int categorical(std::span<const double> weights);

  Eigen::VectorXd normal_vector(int n);

  // Serializable engine state (checkpointing).
  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 eng_;
};

// Inverse standard normal CDF (Wichura AS 241, double precision).
double inverse_normal_cdf(double p);
// Standard normal CDF / log density.
double normal_cdf(double x);
double normal_logpdf(double x, double mean, double var);

}  // namespace panelsv
