#include "panelsv/rng.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "panelsv/common.hpp"

namespace panelsv {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string Fnv1a::hex() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash_));
  return buf;
}

double Rng::uniform() {
  // 53 random bits -> (0,1), then clamp away from the endpoints.
  double u = (eng_() >> 11) * 0x1.0p-53;
  const double eps = 0x1.0p-54;
  if (u < eps) return eps;
  if (u > 1.0 - eps) return 1.0 - eps;
  return u;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return inverse_normal_cdf(uniform()); }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    fail(ErrorCode::invalid_argument, "gamma: shape and rate must be > 0");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back (Marsaglia-Tsang section 6).
    double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::inv_gamma(double shape, double scale) {
  if (!(scale > 0.0))
    fail(ErrorCode::invalid_argument, "inv_gamma: scale must be > 0");
  return scale / gamma(shape, 1.0);
}

double Rng::truncated_normal_lower(double mean, double sd, double lower,
                                   int retry_budget) {
  if (!(sd > 0.0))
    fail(ErrorCode::invalid_argument, "truncated_normal: sd must be > 0");
  const double a = (lower - mean) / sd;
  if (a < 6.0) {
    // Inverse-CDF on the truncated interval; exact and rejection-free.
    double pa = normal_cdf(a);
    if (pa < 1.0 - 1e-12) {
      double u = pa + (1.0 - pa) * uniform();
      double z = inverse_normal_cdf(u);
      if (z >= a) return mean + sd * z;
    }
  }
  // Deep tail: Robert (1995) translated-exponential rejection.
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (int it = 0; it < retry_budget; ++it) {
    double z = a - std::log(uniform()) / alpha;
    double rho = std::exp(-0.5 * (z - alpha) * (z - alpha));
    if (uniform() <= rho) return mean + sd * z;
  }
  fail(ErrorCode::numeric, "truncated_normal: retry budget exhausted");
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0))
    fail(ErrorCode::numeric, "categorical: nonpositive total weight");
  double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < weights.size(); ++s) {
    acc += weights[s];
    if (u <= acc) return static_cast<int>(s);
  }
  return static_cast<int>(weights.size()) - 1;
}

Eigen::VectorXd Rng::normal_vector(int n) {
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = normal();
  return z;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> eng_;
  if (is.fail()) fail(ErrorCode::parse, "rng: malformed engine state");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_logpdf(double x, double mean, double var) {
  const double log2pi = 1.8378770664093454836;
  double d = x - mean;
  return -0.5 * (log2pi + std::log(var) + d * d / var);
}

double inverse_normal_cdf(double p) {
  // Wichura (1988), algorithm AS 241, PPND16.
  if (!(p > 0.0 && p < 1.0))
    fail(ErrorCode::invalid_argument, "inverse_normal_cdf: p outside (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e+0) *
                  r +
              3.64784832476320460504e+0) *
                 r +
             5.76949722146069140550e+0) *
                r +
            4.63033784615654529590e+0) *
               r +
           1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e+0) *
                r +
            2.05319162663775882187e+0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e+0) *
                r +
            5.46378491116411436990e+0) *
               r +
           6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace panelsv
