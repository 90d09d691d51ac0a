#include "panelsv.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "panelsv/chain.hpp"
#include "panelsv/common.hpp"
#include "panelsv/dgp.hpp"
#include "panelsv/factor.hpp"
#include "panelsv/io.hpp"
#include "panelsv/types.hpp"

using namespace panelsv;

struct psv_panel {
  PanelDataset data;
};

struct psv_sim {
  psv_panel panel;
  GroundTruth truth;
  std::string scenario;
  std::uint64_t seed = 0;
};

struct psv_fit {
  ChainOutput output;
  SummaryTable summary;
  RunManifest manifest;
  std::vector<std::string> individual_ids;
};

namespace {

thread_local std::string g_last_error = "no error";

psv_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return PSV_ERR_INVALID_ARGUMENT;
    case ErrorCode::parse: return PSV_ERR_PARSE;
    case ErrorCode::dimension: return PSV_ERR_DIMENSION;
    case ErrorCode::numeric: return PSV_ERR_NUMERIC;
    case ErrorCode::io: return PSV_ERR_IO;
    case ErrorCode::unknown_scenario: return PSV_ERR_UNKNOWN_SCENARIO;
    case ErrorCode::internal: return PSV_ERR_INTERNAL;
  }
  return PSV_ERR_INTERNAL;
}

template <typename Fn>
psv_status guarded(Fn&& fn) {
  try {
    fn();
    return PSV_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PSV_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PSV_ERR_INTERNAL;
  }
}

psv_status require(bool ok, const char* message) {
  if (!ok) {
    g_last_error = message;
    return PSV_ERR_INVALID_ARGUMENT;
  }
  return PSV_OK;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string summary_to_csv_text(const SummaryTable& summary) {
  std::string text = "param";
  for (const auto& c : summary.column_labels) text += "," + c;
  text += "\n";
  for (std::size_t j = 0; j < summary.row_labels.size(); ++j) {
    text += summary.row_labels[j];
    for (std::size_t i = 0; i < summary.column_labels.size(); ++i)
      text += "," + format_double(summary.mean(j, i));
    text += "\nt-value";
    for (std::size_t i = 0; i < summary.column_labels.size(); ++i) {
      double tv = summary.t(j, i);
      text += ",";
      text += std::isfinite(tv) ? format_double(tv) : (tv > 0 ? "inf" : "-inf");
    }
    text += "\n";
  }
  return text;
}

}  // namespace

extern "C" {

const char* psv_version(void) { return kArtifactVersion; }

const char* psv_last_error(void) { return g_last_error.c_str(); }

psv_status psv_panel_load_csv(const char* path, int declared_k,
                              psv_panel** out) {
  if (auto st = require(path && out, "psv_panel_load_csv: NULL argument"))
    return st;
  return guarded([&] {
    auto panel = std::make_unique<psv_panel>();
    panel->data = load_panel_csv(path, declared_k);
    *out = panel.release();
  });
}

psv_status psv_panel_write_csv(const psv_panel* panel, const char* path) {
  if (auto st = require(panel && path, "psv_panel_write_csv: NULL argument"))
    return st;
  return guarded([&] { write_panel_csv(panel->data, path); });
}

psv_status psv_panel_dims(const psv_panel* panel, int* n_individuals,
                          int* n_periods, int* n_covariates) {
  if (auto st = require(panel != nullptr, "psv_panel_dims: NULL panel"))
    return st;
  if (n_individuals) *n_individuals = panel->data.n_individuals();
  if (n_periods) *n_periods = panel->data.n_periods();
  if (n_covariates) *n_covariates = panel->data.n_covariates();
  return PSV_OK;
}

psv_status psv_panel_standardize(const psv_panel* panel, int skip_first_column,
                                 psv_panel** out) {
  if (auto st = require(panel && out, "psv_panel_standardize: NULL argument"))
    return st;
  return guarded([&] {
    auto result = std::make_unique<psv_panel>();
    result->data = standardize_covariates(panel->data, skip_first_column != 0);
    *out = result.release();
  });
}

void psv_panel_free(psv_panel* panel) { delete panel; }

psv_status psv_simulate_scenario(const char* scenario, uint64_t seed,
                                 psv_sim** out) {
  if (auto st = require(scenario && out, "psv_simulate_scenario: NULL argument"))
    return st;
  return guarded([&] {
    DgpConfig cfg = scenario_preset(scenario);
    cfg.seed = seed;
    auto sim = std::make_unique<psv_sim>();
    auto [data, truth] = simulate_panel(cfg);
    sim->panel.data = std::move(data);
    sim->truth = std::move(truth);
    sim->scenario = scenario;
    sim->seed = seed;
    *out = sim.release();
  });
}

const psv_panel* psv_sim_panel(const psv_sim* sim) {
  return sim ? &sim->panel : nullptr;
}

psv_status psv_sim_write(const psv_sim* sim, const char* dir) {
  if (auto st = require(sim && dir && *dir, "psv_sim_write: NULL or empty dir"))
    return st;
  return guarded([&] {
    namespace fs = std::filesystem;
    fs::path base(dir);
    std::error_code ec;
    fs::create_directories(base, ec);
    write_panel_csv(sim->panel.data, (base / "dataset.csv").string());
    write_ground_truth(sim->truth, (base / "ground_truth.json").string());
    RunManifest manifest;
    Fnv1a digest;
    digest.update(static_cast<std::int64_t>(sim->panel.data.digest()));
    manifest.dataset_digest = digest.hex();
    manifest.config_hash = manifest.dataset_digest;
    manifest.n_individuals = sim->panel.data.n_individuals();
    manifest.n_periods = sim->panel.data.n_periods();
    manifest.n_covariates = sim->panel.data.n_covariates();
    manifest.n_factors = static_cast<int>(sim->truth.state.loadings.lambda.cols());
    manifest.scenario = sim->scenario;
    manifest.seed = sim->seed;
    write_manifest(manifest, (base / "manifest.json").string());
  });
}

void psv_sim_free(psv_sim* sim) { delete sim; }

psv_status psv_select_num_factors(const psv_panel* panel, int p_max,
                                  int* n_factors) {
  if (auto st = require(panel && n_factors, "psv_select_num_factors: NULL argument"))
    return st;
  return guarded(
      [&] { *n_factors = select_num_factors_icp(panel->data, p_max); });
}

psv_status psv_estimate(const psv_panel* panel, int n_factors,
                        const char* priors_path, const char* chain_path,
                        int no_intercept, psv_fit** out) {
  if (auto st = require(panel && out, "psv_estimate: NULL argument")) return st;
  return guarded([&] {
    PriorConfig priors =
        priors_path ? load_prior_config(priors_path) : PriorConfig{};
    ChainConfig chain = chain_path ? load_chain_config(chain_path) : ChainConfig{};

    const PanelDataset& data = panel->data;
    if (!no_intercept) {
      // Model with a constant term: the first covariate column must be one.
      for (int i = 0; i < data.n_individuals(); ++i)
        if ((data.covariates[i].col(0).array() - 1.0).abs().maxCoeff() > 1e-12)
          fail(ErrorCode::invalid_argument,
               "estimate: first covariate column is not a constant intercept "
               "column; pass no_intercept for a model without constant terms");
    }

    auto fit = std::make_unique<psv_fit>();
    fit->output = run_chain(data, n_factors, priors, chain, !no_intercept);
    fit->individual_ids = data.individual_ids;
    fit->summary = summarize(fit->output, data.individual_ids);

    Fnv1a digest;
    digest.update(static_cast<std::int64_t>(data.digest()));
    fit->manifest.dataset_digest = digest.hex();
    fit->manifest.config_hash = fit->output.config_hash;
    fit->manifest.n_individuals = data.n_individuals();
    fit->manifest.n_periods = data.n_periods();
    fit->manifest.n_covariates = data.n_covariates();
    fit->manifest.n_factors = n_factors;
    fit->manifest.individual_ids = data.individual_ids;
    fit->manifest.seed = chain.seed;
    fit->manifest.no_intercept = no_intercept != 0;
    fit->manifest.priors = priors;
    fit->manifest.chain = chain;
    *out = fit.release();
  });
}

psv_status psv_fit_write(const psv_fit* fit, const char* dir) {
  if (auto st = require(fit && dir && *dir, "psv_fit_write: NULL or empty dir"))
    return st;
  return guarded(
      [&] { write_outputs(fit->output, fit->summary, fit->manifest, dir); });
}

psv_status psv_fit_summary_csv(const psv_fit* fit, char** csv_text) {
  if (auto st = require(fit && csv_text, "psv_fit_summary_csv: NULL argument"))
    return st;
  return guarded([&] {
    *csv_text = dup_string(summary_to_csv_text(fit->summary));
    if (!*csv_text) fail(ErrorCode::internal, "out of memory");
  });
}

void psv_fit_free(psv_fit* fit) { delete fit; }

psv_status psv_summarize_dir(const char* dir, char** csv_text) {
  if (auto st = require(dir && csv_text, "psv_summarize_dir: NULL argument"))
    return st;
  return guarded([&] {
    SummaryTable summary = summarize_chain_dir(dir);
    *csv_text = dup_string(summary_to_csv_text(summary));
    if (!*csv_text) fail(ErrorCode::internal, "out of memory");
  });
}

void psv_string_free(char* text) { std::free(text); }

}  // extern "C"
