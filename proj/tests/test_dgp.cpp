#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "panelsv/common.hpp"
#include "panelsv/dgp.hpp"
#include "panelsv/io.hpp"
#include "panelsv/model.hpp"
#include "panelsv/rng.hpp"

using namespace panelsv;

TEST_CASE("scenario presets match the dimension table") {
  auto m1 = scenario_preset("M1");
  CHECK(m1.dims.n_individuals == 10);
  CHECK(m1.dims.n_covariates == 3);
  CHECK(m1.dims.n_factors == 3);
  CHECK(m1.dims.n_periods == 200);
  auto m5 = scenario_preset("M5");
  CHECK(m5.dims.n_individuals == 10);
  CHECK(m5.dims.n_covariates == 4);
  CHECK(m5.dims.n_factors == 4);
  CHECK(m5.dims.n_periods == 200);
  auto m8 = scenario_preset("M8");
  CHECK(m8.dims.n_individuals == 40);
  CHECK(m8.dims.n_factors == 6);
  CHECK(m8.dims.n_periods == 1000);
  CHECK_THROWS_AS(scenario_preset("M9"), Error);
  CHECK_THROWS_AS(scenario_preset("m1"), Error);
}

TEST_CASE("simulation is deterministic down to serialized bytes") {
  auto cfg = scenario_preset("M1");
  cfg.seed = 42;
  auto [d1, t1] = simulate_panel(cfg);
  auto [d2, t2] = simulate_panel(cfg);
  CHECK(d1.returns == d2.returns);
  CHECK(t1.state.loadings.lambda == t2.state.loadings.lambda);

  std::string p1 = "/tmp/psv_test_dgp_a.csv", p2 = "/tmp/psv_test_dgp_b.csv";
  write_panel_csv(d1, p1);
  write_panel_csv(d2, p2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("covariate rule: mean 2a, variance 2^a") {
  auto cfg = scenario_preset("M1");
  cfg.seed = 11;
  auto [data, truth] = simulate_panel(cfg);
  const int cells = 10 * 200;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < 10; ++i) {
    sum += data.covariates[i].col(1).sum();
    sumsq += data.covariates[i].col(1).squaredNorm();
  }
  double mean = sum / cells;
  double var = sumsq / cells - mean * mean;
  CHECK(std::fabs(mean - 4.0) < 4.0 / std::sqrt(double(cells)));
  CHECK(var == doctest::Approx(4.0).epsilon(0.10));
  // Intercept column is constant one.
  for (int i = 0; i < 10; ++i)
    CHECK((data.covariates[i].col(0).array() == 1.0).all());
}

TEST_CASE("ground truth passes validation for every preset") {
  for (const char* name : {"M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8"}) {
    auto cfg = scenario_preset(name);
    cfg.dims.n_periods = 50;  // keep the sweep cheap
    cfg.seed = 3;
    auto [data, truth] = simulate_panel(cfg);
    CHECK(validate_state(truth.state, cfg.dims).empty());
    CHECK(data.n_individuals() == cfg.dims.n_individuals);
    CHECK(data.n_periods() == 50);
    CHECK(data.n_covariates() == cfg.dims.n_covariates);
  }
}

TEST_CASE("vanishing beta variance: OLS on the factor-free mean recovers 0.06") {
  DgpConfig cfg;
  cfg.dims = {3, 3000, 2, 0};
  cfg.beta_var = 1e-14;
  cfg.alpha1_center = 0.2;  // tame volatility so the OLS error bound is tight
  cfg.alpha1_jitter = 0.0;
  cfg.alpha0_mean = 0.0;
  cfg.seed = 19;
  auto [data, truth] = simulate_panel(cfg);
  for (int i = 0; i < 3; ++i) {
    const MatrixXd& x = data.covariates[i];
    VectorXd beta_ols =
        (x.transpose() * x).ldlt().solve(x.transpose() * data.returns.row(i).transpose());
    CHECK(beta_ols[0] == doctest::Approx(0.06).epsilon(1.0));  // intercept, noisy
    CHECK(std::fabs(beta_ols[1] - 0.06) < 0.05);
  }
}

TEST_CASE("unit innovation scale of the error component") {
  // eta = u * exp(-h/2) recovers the standard normal innovations.
  DgpConfig cfg;
  cfg.dims = {10, 10000, 2, 0};
  cfg.seed = 23;
  auto [data, truth] = simulate_panel(cfg);
  double sumsq = 0.0;
  long count = 0;
  for (int i = 0; i < 10; ++i)
    for (int s = 0; s < 10000; ++s) {
      double mean = truth.state.coeffs.beta.row(i).dot(data.covariates[i].row(s));
      double eta = (data.returns(i, s) - mean) *
                   std::exp(-0.5 * truth.state.logvols.h(i, s));
      sumsq += eta * eta;
      ++count;
    }
  CHECK(sumsq / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("factor log-volatility inherits the AR(1) autocorrelation") {
  DgpConfig cfg;
  cfg.dims = {4, 5000, 2, 2};
  cfg.seed = 29;
  auto [data, truth] = simulate_panel(cfg);
  for (int j = 0; j < 2; ++j) {
    VectorXd q = truth.state.logvols.q.row(j);
    double m = q.mean();
    double denom = (q.array() - m).square().sum();
    double num = 0.0;
    for (int s = 0; s + 1 < q.size(); ++s) num += (q[s] - m) * (q[s + 1] - m);
    CHECK(std::fabs(num / denom - truth.state.volcoeffs.phi1[j]) < 0.1);
  }
}

TEST_CASE("explicit covariate moments override the rule") {
  DgpConfig cfg;
  cfg.dims = {2, 4000, 3, 0};
  cfg.covariate_moments = {{-1.0, 0.25}, {10.0, 9.0}};
  cfg.seed = 31;
  auto [data, truth] = simulate_panel(cfg);
  double m2 = 0.0, m3 = 0.0;
  for (int i = 0; i < 2; ++i) {
    m2 += data.covariates[i].col(1).mean() / 2.0;
    m3 += data.covariates[i].col(2).mean() / 2.0;
  }
  CHECK(m2 == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(m3 == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("standardize_covariates") {
  auto cfg = scenario_preset("M1");
  cfg.seed = 5;
  auto [data, truth] = simulate_panel(cfg);

  SUBCASE("constant intercept column rejected without skip") {
    CHECK_THROWS_WITH_AS(standardize_covariates(data, false),
                         doctest::Contains("x1"), Error);
  }
  SUBCASE("pooled moments after standardization, and idempotence") {
    PanelDataset std1 = standardize_covariates(data, true);
    const int n = 10, t = 200;
    const double cells = n * t;
    for (int a = 1; a < 3; ++a) {
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < n; ++i) {
        sum += std1.covariates[i].col(a).sum();
        sumsq += std1.covariates[i].col(a).squaredNorm();
      }
      double mean = sum / cells;
      double sd = std::sqrt((sumsq - cells * mean * mean) / (cells - 1));
      CHECK(std::fabs(mean) < 1e-12);
      CHECK(std::fabs(sd - 1.0) < 1e-12);
    }
    PanelDataset std2 = standardize_covariates(std1, true);
    for (int i = 0; i < n; ++i)
      CHECK((std2.covariates[i] - std1.covariates[i]).cwiseAbs().maxCoeff() <
            1e-12);
    // Returns untouched.
    CHECK(std1.returns == data.returns);
  }
}
