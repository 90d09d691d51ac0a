#pragma once

#include <string>
#include <vector>

#include "panelsv/chain.hpp"
#include "panelsv/dgp.hpp"
#include "panelsv/types.hpp"

namespace panelsv {

inline constexpr const char* kArtifactVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Panel CSV (long format: individual_id, period, return, x1..xk)
// ---------------------------------------------------------------------------

// declared_k < 0 accepts whatever covariate count the header carries.
PanelDataset load_panel_csv(const std::string& path, int declared_k);
void write_panel_csv(const PanelDataset& dataset, const std::string& path);

// ---------------------------------------------------------------------------
// Ground truth and configuration files (JSON)
// ---------------------------------------------------------------------------

void write_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth read_ground_truth(const std::string& path);

// Partial files are allowed; unspecified fields keep their defaults and
// unknown keys are rejected.
PriorConfig load_prior_config(const std::string& path);
ChainConfig load_chain_config(const std::string& path);

// ---------------------------------------------------------------------------
// Run outputs
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string artifact_version = kArtifactVersion;
  std::string dataset_digest;
  std::string config_hash;
  int n_individuals = 0, n_periods = 0, n_covariates = 0, n_factors = 0;
  std::string scenario;  // empty when estimating user data
  std::vector<std::string> individual_ids;
  std::uint64_t seed = 0;
  bool no_intercept = false;
  PriorConfig priors;
  ChainConfig chain;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

// Writes draws.csv, summary.csv, summary.json, manifest.json, chain_info.json
// and the posterior-mean latent paths; returns the file names written.
std::vector<std::string> write_outputs(const ChainOutput& output,
                                       const SummaryTable& summary,
                                       const RunManifest& manifest,
                                       const std::string& dir);

struct DrawsFile {
  std::vector<std::string> trace_names;
  std::vector<long> sweeps;  // 1-based sweep index per retained row
  MatrixXd traces;           // n_retained x n_traces
};

void write_draws_csv(const ChainOutput& output, const ChainConfig& chain,
                     const std::string& path);
DrawsFile read_draws_csv(const std::string& path);

// Rebuilds the coefficient summary from a written chain directory.
SummaryTable summarize_chain_dir(const std::string& dir);

void write_summary_csv(const SummaryTable& summary, const std::string& path);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct ChainCheckpoint {
  std::string config_hash;
  ChainState state;
  int retained = 0;
  MatrixXd traces;  // retained rows only
  MatrixXd h_sum, q_sum, f_sum;
  std::vector<MatrixXd> h_snapshots, q_snapshots, f_snapshots;
  int n_validation_failures = 0;
  long phi_attempts = 0, phi_accepts = 0;
  long load_attempts = 0, load_accepts = 0;
};

void save_checkpoint(const ChainCheckpoint& checkpoint, const std::string& path);
ChainCheckpoint load_checkpoint(const std::string& path);

}  // namespace panelsv
