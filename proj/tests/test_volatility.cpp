#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "panelsv/common.hpp"
#include "panelsv/dgp.hpp"
#include "panelsv/rng.hpp"
#include "panelsv/volatility.hpp"

using namespace panelsv;

namespace {

StateSpaceView make_view(const oracles::SsmSpec& spec) {
  StateSpaceView view;
  view.z = spec.z;
  view.c = spec.c;
  view.sigma_e = spec.obs_var;
  view.alpha0 = spec.a0;
  view.alpha1 = spec.a1;
  view.sigma_nu = spec.q;
  view.offsets = VectorXd::Zero(spec.dim());
  return view;
}

oracles::SsmSpec random_spec(int d, int t, Rng& rng) {
  oracles::SsmSpec spec;
  spec.z.resize(d, t);
  spec.c.resize(d, t);
  spec.obs_var.resize(d, t);
  spec.a0.resize(d);
  spec.a1.resize(d);
  spec.q.resize(d);
  spec.init_mean.resize(d);
  spec.init_var.resize(d);
  for (int i = 0; i < d; ++i) {
    spec.a0[i] = rng.normal(0.0, 0.3);
    spec.a1[i] = rng.uniform(-0.9, 0.9);
    spec.q[i] = rng.uniform(0.2, 1.5);
    spec.init_mean[i] = rng.normal(0.0, 0.5);
    spec.init_var[i] = rng.uniform(0.5, 3.0);
    for (int s = 0; s < t; ++s) {
      spec.z(i, s) = rng.normal(0.0, 1.5);
      spec.c(i, s) = rng.normal(0.0, 0.5);
      spec.obs_var(i, s) = rng.uniform(0.3, 2.0);
    }
  }
  return spec;
}

}  // namespace

TEST_CASE("mixture table invariants") {
  const auto& table = log_chisq_mixture();
  double wsum = 0.0;
  for (const auto& c : table) {
    wsum += c.weight;
    CHECK(c.variance > 0.0);
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(mixture_mean(table) - (-1.27036)) < 0.02);
  CHECK(std::fabs(mixture_variance(table) - 4.9348) < 0.1);
}

TEST_CASE("build_state_space") {
  auto cfg = scenario_preset("M1");
  cfg.seed = 100;
  auto [data, truth] = simulate_panel(cfg);

  SUBCASE("stacked shape is (N+p) x T") {
    StateSpaceView view = build_state_space(data, truth.state);
    CHECK(view.z.rows() == 13);
    CHECK(view.z.cols() == 200);
    CHECK(view.alpha0.size() == 13);
    // First N rows carry the idiosyncratic AR coefficients, last p the
    // factor ones.
    CHECK(view.alpha1[0] == truth.state.volcoeffs.alpha1[0]);
    CHECK(view.alpha1[12] == truth.state.volcoeffs.phi1[2]);
  }

  SUBCASE("log transform applies log(u^2 + offset)") {
    // Alternating +/-1 residuals have population variance exactly 1, so the
    // offset is exactly offset_scale.
    PanelDataset d2;
    const int t = 50;
    d2.returns.resize(1, t);
    for (int s = 0; s < t; ++s) d2.returns(0, s) = (s % 2 == 0) ? 1.0 : -1.0;
    d2.covariates.assign(1, MatrixXd::Zero(t, 1));
    d2.period_index.resize(t);
    for (int s = 0; s < t; ++s) d2.period_index[s] = s + 1;
    ParameterState st;
    st.coeffs.beta = MatrixXd::Zero(1, 1);
    st.loadings.lambda = MatrixXd(1, 0);
    st.factors.f = MatrixXd(0, t);
    st.logvols.h = MatrixXd::Zero(1, t);
    st.logvols.q = MatrixXd(0, t);
    st.volcoeffs.alpha0 = VectorXd::Zero(1);
    st.volcoeffs.alpha1 = VectorXd::Constant(1, 0.5);
    st.volcoeffs.sigma2_v = VectorXd::Ones(1);
    st.volcoeffs.phi0 = VectorXd(0);
    st.volcoeffs.phi1 = VectorXd(0);
    st.volcoeffs.sigma2_w = VectorXd(0);
    st.scales.sigma2_err = VectorXd::Ones(1);
    st.scales.vartheta = VectorXd::Ones(1);
    st.scales.phi_acf = VectorXd::Constant(1, 0.5);
    st.mixture_indicators = MatrixXi::Constant(1, t, 4);
    StateSpaceView view = build_state_space(d2, st, 1e-6);
    CHECK(view.offsets[0] == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(view.z(0, 0) == doctest::Approx(std::log(1.0 + 1e-6)).epsilon(1e-12));
  }

  SUBCASE("exponentiation round trip on noise-free cells") {
    StateSpaceView view = build_state_space(data, truth.state);
    // Rebuild z from eta = 1 exactly: u = exp(h/2) => z ~= h.
    const auto& h = truth.state.logvols.h;
    for (int i = 0; i < 3; ++i)
      for (int s = 0; s < 5; ++s) {
        double u2 = std::exp(h(i, s));
        double z = std::log(u2 + view.offsets[i]);
        double rel = std::fabs(std::exp(z) - u2) / u2;
        CHECK(rel <= 2.0 * view.offsets[i] / u2 + 1e-15);
      }
  }
}

TEST_CASE("log squared standard normal matches the digamma constant") {
  Rng rng(110);
  const int n = 1000000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = rng.normal();
    acc += std::log(e * e);
  }
  CHECK(acc / n == doctest::Approx(-1.27036).epsilon(0.01));
}

TEST_CASE("mixture indicator draws follow the enumerated posterior") {
  const auto& table = log_chisq_mixture();
  Rng rng(111);

  SUBCASE("the component at the residual has the largest frequency") {
    MatrixXd e = MatrixXd::Constant(1, 20000, table[3].mean);
    MatrixXi ind = sample_mixture_indicators(e, table, rng);
    std::array<int, 7> counts{};
    for (int s = 0; s < ind.cols(); ++s) counts[ind(0, s) - 1]++;
    int argmax = 0;
    for (int c = 1; c < 7; ++c)
      if (counts[c] > counts[argmax]) argmax = c;
    CHECK(argmax == 3);
  }

  SUBCASE("frequencies match brute-force enumeration on a grid") {
    for (double e : {-8.0, -3.0, -1.0, 0.5, 2.0}) {
      // Enumerated posterior over the 7 components.
      std::array<double, 7> w{};
      double total = 0.0;
      for (int c = 0; c < 7; ++c) {
        double d = e - table[c].mean;
        w[c] = table[c].weight / std::sqrt(2.0 * M_PI * table[c].variance) *
               std::exp(-0.5 * d * d / table[c].variance);
        total += w[c];
      }
      const int draws = 40000;
      MatrixXd em = MatrixXd::Constant(1, draws, e);
      MatrixXi ind = sample_mixture_indicators(em, table, rng);
      std::array<int, 7> counts{};
      for (int s = 0; s < draws; ++s) counts[ind(0, s) - 1]++;
      for (int c = 0; c < 7; ++c) {
        double p = w[c] / total;
        double se = std::sqrt(p * (1.0 - p) / draws);
        CHECK(std::fabs(counts[c] / double(draws) - p) <= 3.0 * se + 1e-9);
      }
    }
  }
}

TEST_CASE("forward filter") {
  SUBCASE("single period combines prior and observation exactly") {
    Rng rng(112);
    oracles::SsmSpec spec = random_spec(2, 1, rng);
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    for (int i = 0; i < 2; ++i) {
      double prec = 1.0 / spec.init_var[i] + 1.0 / spec.obs_var(i, 0);
      double mean = (spec.init_mean[i] / spec.init_var[i] +
                     (spec.z(i, 0) - spec.c(i, 0)) / spec.obs_var(i, 0)) /
                    prec;
      CHECK(fm.m(i, 0) == doctest::Approx(mean).epsilon(1e-12));
      CHECK(fm.d(i, 0) == doctest::Approx(1.0 / prec).epsilon(1e-12));
    }
  }

  SUBCASE("static limit reduces to the precision-weighted average") {
    const int t = 12;
    oracles::SsmSpec spec;
    Rng rng(113);
    spec.z.resize(1, t);
    spec.c = MatrixXd::Zero(1, t);
    spec.obs_var.resize(1, t);
    for (int s = 0; s < t; ++s) {
      spec.z(0, s) = rng.normal(2.0, 1.0);
      spec.obs_var(0, s) = rng.uniform(0.5, 2.0);
    }
    spec.a0 = VectorXd::Zero(1);
    spec.a1 = VectorXd::Ones(1);
    spec.q = VectorXd::Zero(1);
    spec.init_mean = VectorXd::Zero(1);
    spec.init_var = VectorXd::Constant(1, 1e8);
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    double num = 0.0, den = 0.0;
    for (int s = 0; s < t; ++s) {
      num += spec.z(0, s) / spec.obs_var(0, s);
      den += 1.0 / spec.obs_var(0, s);
    }
    CHECK(fm.m(0, t - 1) == doctest::Approx(num / den).epsilon(1e-7));
  }

  SUBCASE("matches the dense joint-Gaussian filter on a small instance") {
    Rng rng(114);
    oracles::SsmSpec spec = random_spec(2, 4, rng);
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    oracles::DenseFiltered oracle = oracles::dense_filter(spec);
    CHECK((fm.m - oracle.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fm.d - oracle.var).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("univariate decomposition equals the blocked multivariate filter") {
    Rng rng(115);
    oracles::SsmSpec spec = random_spec(5, 30, rng);
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    oracles::DenseFiltered blocked = oracles::blocked_kalman_filter(spec);
    CHECK((fm.m - blocked.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fm.d - blocked.var).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("backward sampling") {
  SUBCASE("terminal draws match the filtered moments") {
    Rng rng(116);
    oracles::SsmSpec spec = random_spec(2, 5, rng);
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    const int draws = 100000;
    VectorXd acc = VectorXd::Zero(2), accsq = VectorXd::Zero(2);
    for (int it = 0; it < draws; ++it) {
      MatrixXd path = backward_sample(fm, view, rng);
      acc += path.col(4);
      accsq += path.col(4).cwiseProduct(path.col(4));
    }
    for (int i = 0; i < 2; ++i) {
      double mean = acc[i] / draws;
      double var = accsq[i] / draws - mean * mean;
      CHECK(std::fabs(mean - fm.m(i, 4)) < 3.0 * std::sqrt(fm.d(i, 4) / draws));
      CHECK(var == doctest::Approx(fm.d(i, 4)).epsilon(0.05));
    }
  }

  SUBCASE("deterministic evolution gives a constant path") {
    Rng rng(117);
    oracles::SsmSpec spec = random_spec(1, 6, rng);
    spec.a0.setZero();
    spec.a1.setOnes();
    spec.q.setZero();
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    MatrixXd path = backward_sample(fm, view, rng);
    for (int s = 1; s < 6; ++s)
      CHECK(std::fabs(path(0, s) - path(0, 0)) < 1e-8);
  }

  SUBCASE("sampled paths match the dense smoother (mean and covariance)") {
    Rng rng(118);
    oracles::SsmSpec spec = random_spec(1, 4, rng);
    StateSpaceView view = make_view(spec);
    FilterMoments fm = forward_filter(view, spec.init_mean, spec.init_var);
    auto exact = oracles::dense_smoother(spec);

    const int draws = 100000;
    VectorXd acc = VectorXd::Zero(4);
    MatrixXd sum = MatrixXd::Zero(4, 4);
    for (int it = 0; it < draws; ++it) {
      MatrixXd path = backward_sample(fm, view, rng);
      VectorXd v = path.row(0).transpose();
      acc += v;
      sum += v * v.transpose();
    }
    VectorXd mean = acc / draws;
    MatrixXd cov = sum / draws - mean * mean.transpose();
    for (int s = 0; s < 4; ++s)
      CHECK(std::fabs(mean[s] - exact.mean[s]) <
            3.0 * std::sqrt(exact.cov(s, s) / draws));
    CHECK((cov - exact.cov).norm() / exact.cov.norm() < 0.05);
  }
}

TEST_CASE("volatility coefficient draws") {
  VolatilityPrior prior;

  SUBCASE("flat prior slope moments equal OLS") {
    VolatilityPrior flat;
    flat.coef_prior_var_intercept = 0.0;  // zero precision contribution
    flat.coef_prior_var_slope = 0.0;
    Rng rng(120);
    const int t = 80;
    LogVolPaths paths;
    paths.h.resize(1, t);
    paths.q.resize(0, t);
    double prev = 0.0;
    for (int s = 0; s < t; ++s) {
      prev = 0.1 + 0.7 * prev + rng.normal();
      paths.h(0, s) = prev;
    }
    VolCoeffsDraw draw = sample_vol_coeffs(paths, flat, rng);
    // OLS on the lagged regression.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int s = 1; s < t; ++s) {
      double x = paths.h(0, s - 1), y = paths.h(0, s);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const int nobs = t - 1;
    double slope_ols = (nobs * sxy - sx * sy) / (nobs * sxx - sx * sx);
    CHECK(draw.slope_mean[0] == doctest::Approx(slope_ols).epsilon(1e-10));
  }

  SUBCASE("long path recovers the generating coefficients") {
    Rng rng(121);
    const int t = 5000;
    LogVolPaths paths;
    paths.h.resize(1, t);
    paths.q.resize(0, t);
    double prev = 0.0;
    for (int s = 0; s < t; ++s) {
      prev = 0.08 + 0.85 * prev + rng.normal();
      paths.h(0, s) = prev;
    }
    double a0 = 0.0, a1 = 0.0;
    const int draws = 3000;
    for (int it = 0; it < draws; ++it) {
      VolCoeffsDraw d = sample_vol_coeffs(paths, prior, rng);
      a0 += d.coeffs.alpha0[0];
      a1 += d.coeffs.alpha1[0];
    }
    CHECK(std::fabs(a0 / draws - 0.08) < 0.05);
    CHECK(std::fabs(a1 / draws - 0.85) < 0.05);
  }

  SUBCASE("variance draws are strictly positive and slopes stationary") {
    Rng rng(122);
    const int t = 40;
    LogVolPaths paths;
    paths.h.resize(2, t);
    paths.q.resize(1, t);
    for (int s = 0; s < t; ++s) {
      for (int i = 0; i < 2; ++i) paths.h(i, s) = rng.normal();
      paths.q(0, s) = rng.normal();
    }
    for (int it = 0; it < 2000; ++it) {
      VolCoeffsDraw d = sample_vol_coeffs(paths, prior, rng);
      for (int i = 0; i < 2; ++i) {
        REQUIRE(d.coeffs.sigma2_v[i] > 0.0);
        REQUIRE(std::fabs(d.coeffs.alpha1[i]) < 1.0);
      }
      REQUIRE(d.coeffs.sigma2_w[0] > 0.0);
      REQUIRE(std::fabs(d.coeffs.phi1[0]) < 1.0);
    }
  }

  SUBCASE("inverse-gamma conditional matches its analytic moments") {
    Rng rng(123);
    const int t = 60;
    LogVolPaths paths;
    paths.h.resize(1, t);
    paths.q.resize(0, t);
    double prev = 0.0;
    for (int s = 0; s < t; ++s) {
      prev = 0.4 * prev + rng.normal(0.0, 1.3);
      paths.h(0, s) = prev;
    }
    // Oracle: direct normal-inverse-gamma algebra.
    Eigen::Matrix2d xtx = Eigen::Matrix2d::Zero();
    Eigen::Vector2d xty = Eigen::Vector2d::Zero();
    double yty = 0.0;
    for (int s = 1; s < t; ++s) {
      Eigen::Vector2d x(1.0, paths.h(0, s - 1));
      xtx += x * x.transpose();
      xty += x * paths.h(0, s);
      yty += paths.h(0, s) * paths.h(0, s);
    }
    Eigen::Matrix2d prior_prec =
        Eigen::Vector2d(1.0 / prior.coef_prior_var_intercept,
                        1.0 / prior.coef_prior_var_slope)
            .asDiagonal();
    Eigen::Vector2d prior_mean(prior.coef_prior_mean_intercept,
                               prior.coef_prior_mean_slope);
    Eigen::Matrix2d post_prec = xtx + prior_prec;
    Eigen::Vector2d coef_mean =
        post_prec.inverse() * (xty + prior_prec * prior_mean);
    double sse = yty + prior_mean.dot(prior_prec * prior_mean) -
                 coef_mean.dot(post_prec * coef_mean);
    double shape = 0.5 * (prior.nu_h + t - 1);
    double scale = 0.5 * (prior.nu_h * prior.s2_h + sse);

    std::vector<double> s2(60000);
    double acc0 = 0.0, acc1 = 0.0;
    for (auto& v : s2) {
      VolCoeffsDraw d = sample_vol_coeffs(paths, prior, rng);
      v = d.coeffs.sigma2_v[0];
      acc0 += d.coeffs.alpha0[0];
      acc1 += d.coeffs.alpha1[0];
    }
    CHECK(oracles::mean_of(s2) ==
          doctest::Approx(scale / (shape - 1.0)).epsilon(0.02));
    CHECK(acc0 / s2.size() == doctest::Approx(coef_mean[0]).epsilon(0.05));
    CHECK(std::fabs(acc1 / s2.size() - coef_mean[1]) < 0.01);
  }
}
