#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "panelsv.h"

namespace fs = std::filesystem;

TEST_CASE("version and null-argument handling") {
  CHECK(std::strlen(psv_version()) > 0);
  CHECK(psv_panel_load_csv(nullptr, -1, nullptr) == PSV_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(psv_last_error()) > 0);
  psv_panel_free(nullptr);
  psv_sim_free(nullptr);
  psv_fit_free(nullptr);
}

TEST_CASE("simulate / dims / write / reload through the C surface") {
  psv_sim* sim = nullptr;
  REQUIRE(psv_simulate_scenario("M1", 99, &sim) == PSV_OK);
  const psv_panel* panel = psv_sim_panel(sim);
  int n = 0, t = 0, k = 0;
  REQUIRE(psv_panel_dims(panel, &n, &t, &k) == PSV_OK);
  CHECK(n == 10);
  CHECK(t == 200);
  CHECK(k == 3);

  const std::string dir = "/tmp/psv_capi_sim";
  fs::remove_all(dir);
  REQUIRE(psv_sim_write(sim, dir.c_str()) == PSV_OK);
  CHECK(fs::exists(dir + "/dataset.csv"));
  CHECK(fs::exists(dir + "/ground_truth.json"));
  CHECK(fs::exists(dir + "/manifest.json"));

  psv_panel* loaded = nullptr;
  REQUIRE(psv_panel_load_csv((dir + "/dataset.csv").c_str(), 3, &loaded) ==
          PSV_OK);
  int n2 = 0, t2 = 0, k2 = 0;
  psv_panel_dims(loaded, &n2, &t2, &k2);
  CHECK(n2 == 10);
  CHECK(t2 == 200);
  psv_panel_free(loaded);
  psv_sim_free(sim);
  fs::remove_all(dir);
}

TEST_CASE("unknown scenario reports the right status") {
  psv_sim* sim = nullptr;
  CHECK(psv_simulate_scenario("M9", 1, &sim) == PSV_ERR_UNKNOWN_SCENARIO);
  CHECK(std::string(psv_last_error()).find("M9") != std::string::npos);
}

TEST_CASE("standardize through the C surface") {
  psv_sim* sim = nullptr;
  REQUIRE(psv_simulate_scenario("M1", 7, &sim) == PSV_OK);

  psv_panel* out = nullptr;
  // Column 1 is the constant intercept: full standardization must fail.
  CHECK(psv_panel_standardize(psv_sim_panel(sim), 0, &out) ==
        PSV_ERR_INVALID_ARGUMENT);
  REQUIRE(psv_panel_standardize(psv_sim_panel(sim), 1, &out) == PSV_OK);
  psv_panel_free(out);
  psv_sim_free(sim);
}

TEST_CASE("factor selection and estimation through the C surface") {
  psv_sim* sim = nullptr;
  REQUIRE(psv_simulate_scenario("M1", 13, &sim) == PSV_OK);
  int p = -1;
  REQUIRE(psv_select_num_factors(psv_sim_panel(sim), 6, &p) == PSV_OK);
  CHECK(p >= 0);
  CHECK(p <= 6);

  // Tiny chain config for a smoke-level estimation.
  const std::string chain_path = "/tmp/psv_capi_chain.json";
  {
    std::ofstream os(chain_path);
    os << R"({"n_iter": 30, "burn_in": 10, "seed": 4})";
  }
  psv_fit* fit = nullptr;
  REQUIRE(psv_estimate(psv_sim_panel(sim), 3, nullptr, chain_path.c_str(), 0,
                       &fit) == PSV_OK);
  const std::string dir = "/tmp/psv_capi_fit";
  fs::remove_all(dir);
  REQUIRE(psv_fit_write(fit, dir.c_str()) == PSV_OK);

  char* csv1 = nullptr;
  REQUIRE(psv_fit_summary_csv(fit, &csv1) == PSV_OK);
  char* csv2 = nullptr;
  REQUIRE(psv_summarize_dir(dir.c_str(), &csv2) == PSV_OK);
  CHECK(std::string(csv1) == std::string(csv2));
  CHECK(std::string(csv1).rfind("param,", 0) == 0);
  psv_string_free(csv1);
  psv_string_free(csv2);
  psv_fit_free(fit);
  psv_sim_free(sim);
  fs::remove_all(dir);
  std::remove(chain_path.c_str());
}

TEST_CASE("estimate without intercept flag on intercept-free data") {
  // Build a small intercept-free panel by standardizing away from the
  // simulated design: write a custom CSV.
  const std::string csv_path = "/tmp/psv_capi_noint.csv";
  {
    std::ofstream os(csv_path);
    os << "individual_id,period,return,x1,x2\n";
    unsigned state = 12345;
    auto next = [&] {
      state = state * 1103515245u + 12345u;
      return ((state >> 16) % 1000) / 500.0 - 1.0;
    };
    for (int i = 1; i <= 4; ++i)
      for (int s = 1; s <= 30; ++s)
        os << "s" << i << ',' << s << ',' << next() << ',' << next() << ','
           << next() << "\n";
  }
  psv_panel* panel = nullptr;
  REQUIRE(psv_panel_load_csv(csv_path.c_str(), 2, &panel) == PSV_OK);

  const std::string chain_path = "/tmp/psv_capi_chain2.json";
  {
    std::ofstream os(chain_path);
    os << R"({"n_iter": 20, "burn_in": 5, "seed": 8})";
  }
  // Without the flag the intercept check must fire.
  psv_fit* fit = nullptr;
  CHECK(psv_estimate(panel, 1, nullptr, chain_path.c_str(), 0, &fit) ==
        PSV_ERR_INVALID_ARGUMENT);
  CHECK(std::string(psv_last_error()).find("intercept") != std::string::npos);
  // With the flag it runs.
  REQUIRE(psv_estimate(panel, 1, nullptr, chain_path.c_str(), 1, &fit) == PSV_OK);
  char* csv = nullptr;
  REQUIRE(psv_fit_summary_csv(fit, &csv) == PSV_OK);
  CHECK(std::string(csv).find("var1") != std::string::npos);
  CHECK(std::string(csv).find("const") == std::string::npos);
  psv_string_free(csv);
  psv_fit_free(fit);
  psv_panel_free(panel);
  std::remove(csv_path.c_str());
  std::remove(chain_path.c_str());
}
