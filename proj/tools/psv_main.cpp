// Command-line driver for the panelsv shared library. Talks to the library
// exclusively through the public C API.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "panelsv.h"

namespace {

int fail_with(const std::string& context) {
  std::fprintf(stderr, "psv: %s: %s\n", context.c_str(), psv_last_error());
  return 1;
}

struct PanelGuard {
  psv_panel* p = nullptr;
  ~PanelGuard() { psv_panel_free(p); }
};
struct SimGuard {
  psv_sim* p = nullptr;
  ~SimGuard() { psv_sim_free(p); }
};
struct FitGuard {
  psv_fit* p = nullptr;
  ~FitGuard() { psv_fit_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panelsv: panel data factor stochastic volatility"};
  app.set_version_flag("--version", std::string(psv_version()));
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a scenario dataset");
  std::string sim_scenario, sim_out;
  std::uint64_t sim_seed = 0;
  sim_cmd->add_option("--scenario", sim_scenario, "Scenario name (M1..M8)")
      ->required();
  sim_cmd->add_option("--seed", sim_seed, "Generator seed")->required();
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();

  // ---- select-factors ----
  auto* sel_cmd =
      app.add_subcommand("select-factors", "Choose the number of common factors");
  std::string sel_data;
  int sel_pmax = 6;
  sel_cmd->add_option("--data", sel_data, "Panel CSV file")->required();
  sel_cmd->add_option("--p-max", sel_pmax, "Largest factor count considered");

  // ---- estimate ----
  auto* est_cmd = app.add_subcommand("estimate", "Run the MCMC estimation");
  std::string est_data, est_priors, est_chain, est_out;
  int est_factors = 0;
  bool est_nointercept = false;
  est_cmd->add_option("--data", est_data, "Panel CSV file")->required();
  est_cmd->add_option("--factors", est_factors, "Number of common factors")
      ->required();
  est_cmd->add_option("--priors", est_priors, "Prior configuration JSON");
  est_cmd->add_option("--chain", est_chain, "Chain configuration JSON");
  est_cmd->add_option("--out", est_out, "Output directory")->required();
  est_cmd->add_flag("--no-intercept", est_nointercept,
                    "Fit the model without constant terms");

  // ---- summarize ----
  auto* sum_cmd =
      app.add_subcommand("summarize", "Print the coefficient summary of a chain");
  std::string sum_chain;
  sum_cmd->add_option("--chain", sum_chain, "Chain output directory")->required();

  // ---- standardize ----
  auto* std_cmd =
      app.add_subcommand("standardize", "Standardize covariates to mean 0, sd 1");
  std::string std_data, std_out;
  bool std_skip = false;
  std_cmd->add_option("--data", std_data, "Panel CSV file")->required();
  std_cmd->add_option("--out", std_out, "Output CSV file")->required();
  std_cmd->add_flag("--skip-intercept", std_skip,
                    "Leave the first covariate column untouched");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (sim_cmd->parsed()) {
    SimGuard sim;
    if (auto st = psv_simulate_scenario(sim_scenario.c_str(), sim_seed, &sim.p))
      return fail_with("simulate");
    if (auto st = psv_sim_write(sim.p, sim_out.c_str()))
      return fail_with("simulate: write");
    std::printf("wrote dataset.csv, ground_truth.json, manifest.json to %s\n",
                sim_out.c_str());
    return 0;
  }

  if (sel_cmd->parsed()) {
    PanelGuard panel;
    if (auto st = psv_panel_load_csv(sel_data.c_str(), -1, &panel.p))
      return fail_with("select-factors: load");
    int p = 0;
    if (auto st = psv_select_num_factors(panel.p, sel_pmax, &p))
      return fail_with("select-factors");
    std::printf("%d\n", p);
    return 0;
  }

  if (est_cmd->parsed()) {
    PanelGuard panel;
    if (auto st = psv_panel_load_csv(est_data.c_str(), -1, &panel.p))
      return fail_with("estimate: load");
    FitGuard fit;
    if (auto st = psv_estimate(panel.p, est_factors,
                               est_priors.empty() ? nullptr : est_priors.c_str(),
                               est_chain.empty() ? nullptr : est_chain.c_str(),
                               est_nointercept ? 1 : 0, &fit.p))
      return fail_with("estimate");
    if (auto st = psv_fit_write(fit.p, est_out.c_str()))
      return fail_with("estimate: write");
    char* csv = nullptr;
    if (auto st = psv_fit_summary_csv(fit.p, &csv))
      return fail_with("estimate: summary");
    std::fputs(csv, stdout);
    psv_string_free(csv);
    return 0;
  }

  if (sum_cmd->parsed()) {
    char* csv = nullptr;
    if (auto st = psv_summarize_dir(sum_chain.c_str(), &csv))
      return fail_with("summarize");
    std::fputs(csv, stdout);
    psv_string_free(csv);
    return 0;
  }

  if (std_cmd->parsed()) {
    PanelGuard panel;
    if (auto st = psv_panel_load_csv(std_data.c_str(), -1, &panel.p))
      return fail_with("standardize: load");
    PanelGuard result;
    if (auto st = psv_panel_standardize(panel.p, std_skip ? 1 : 0, &result.p))
      return fail_with("standardize");
    if (auto st = psv_panel_write_csv(result.p, std_out.c_str()))
      return fail_with("standardize: write");
    std::printf("wrote %s\n", std_out.c_str());
    return 0;
  }

  return 2;
}
