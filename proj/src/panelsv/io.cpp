#include "panelsv/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "panelsv/common.hpp"

namespace panelsv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  if (path.empty()) fail(ErrorCode::io, "write: empty output path");
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot open '" + tmp + "' for writing");
    os << content;
    if (!os) fail(ErrorCode::io, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "rename to '" + path + "' failed: " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    fail(ErrorCode::parse, context + ": cannot parse number '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    fail(ErrorCode::parse, context + ": cannot parse integer '" + s + "'");
  return v;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) fail(ErrorCode::parse, name + ": expected array of arrays");
  const auto rows = j.size();
  if (rows == 0) return MatrixXd(0, 0);
  const auto cols = j[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) fail(ErrorCode::parse, name + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) fail(ErrorCode::parse, name + ": expected array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json imatrix_to_json(const MatrixXi& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXi imatrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) fail(ErrorCode::parse, name + ": expected array of arrays");
  const auto rows = j.size();
  if (rows == 0) return MatrixXi(0, 0);
  const auto cols = j[0].size();
  MatrixXi m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<int>();
  return m;
}

json parse_json(const std::string& text, const std::string& context) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::parse, context + ": malformed JSON");
  return j;
}

// Reads fields listed in `keys` into the config via setter; rejects unknown keys.
void check_known_keys(const json& j, const std::set<std::string>& keys,
                      const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key()))
      fail(ErrorCode::parse, context + ": unknown field '" + it.key() + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Panel CSV
// ---------------------------------------------------------------------------

PanelDataset load_panel_csv(const std::string& path, int declared_k) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line))
    fail(ErrorCode::parse, path + ": empty file (header row required)");
  auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "individual_id" || header[1] != "period" ||
      header[2] != "return")
    fail(ErrorCode::parse,
         path + ": header must start with individual_id,period,return,x1,...");
  const int k = static_cast<int>(header.size()) - 3;
  for (int a = 0; a < k; ++a)
    if (header[3 + a] != "x" + std::to_string(a + 1))
      fail(ErrorCode::parse, path + ": covariate column " + std::to_string(a + 4) +
                                 " must be named x" + std::to_string(a + 1));
  if (declared_k >= 0 && declared_k != k)
    fail(ErrorCode::parse, path + ": schema error: file has " + std::to_string(k) +
                               " covariate columns, declared " +
                               std::to_string(declared_k));

  struct Cell {
    double ret;
    std::vector<double> x;
  };
  std::vector<std::string> ids;
  std::map<std::string, int> id_index;
  std::vector<std::map<long, Cell>> cells;
  std::set<long> periods;

  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (static_cast<int>(f.size()) != 3 + k)
      fail(ErrorCode::parse, ctx + ": expected " + std::to_string(3 + k) +
                                 " fields, got " + std::to_string(f.size()));
    const std::string& id = f[0];
    long period = parse_long(f[1], ctx);
    Cell cell;
    cell.ret = parse_double(f[2], ctx);
    cell.x.resize(k);
    for (int a = 0; a < k; ++a) cell.x[a] = parse_double(f[3 + a], ctx);
    auto [it, inserted] = id_index.try_emplace(id, static_cast<int>(ids.size()));
    if (inserted) {
      ids.push_back(id);
      cells.emplace_back();
    }
    if (!cells[it->second].emplace(period, std::move(cell)).second)
      fail(ErrorCode::parse, ctx + ": duplicate cell (" + id + ", " +
                                 std::to_string(period) + ")");
    periods.insert(period);
  }
  if (ids.empty()) fail(ErrorCode::parse, path + ": no data rows");

  std::vector<long> period_list(periods.begin(), periods.end());
  for (std::size_t s = 1; s < period_list.size(); ++s)
    if (period_list[s] != period_list[s - 1] + 1)
      fail(ErrorCode::parse,
           path + ": continuity error: gap in period sequence between " +
               std::to_string(period_list[s - 1]) + " and " +
               std::to_string(period_list[s]));
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (long period : period_list)
      if (!cells[i].count(period))
        fail(ErrorCode::parse, path + ": continuity error: individual \"" +
                                   ids[i] + "\" is missing period " +
                                   std::to_string(period));

  const int n = static_cast<int>(ids.size());
  const int t = static_cast<int>(period_list.size());
  PanelDataset out;
  out.individual_ids = ids;
  out.period_index.assign(period_list.begin(), period_list.end());
  out.returns.resize(n, t);
  out.covariates.assign(n, MatrixXd(t, k));
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t; ++s) {
      const Cell& c = cells[i].at(period_list[s]);
      out.returns(i, s) = c.ret;
      for (int a = 0; a < k; ++a) out.covariates[i](s, a) = c.x[a];
    }
  out.validate();
  return out;
}

void write_panel_csv(const PanelDataset& dataset, const std::string& path) {
  dataset.validate();
  const int n = dataset.n_individuals(), t = dataset.n_periods(),
            k = dataset.n_covariates();
  std::ostringstream os;
  os << "individual_id,period,return";
  for (int a = 1; a <= k; ++a) os << ",x" << a;
  os << "\n";
  for (int i = 0; i < n; ++i) {
    std::string id = dataset.individual_ids.empty() ? "i" + std::to_string(i + 1)
                                                    : dataset.individual_ids[i];
    for (int s = 0; s < t; ++s) {
      os << id << ',' << dataset.period_index[s] << ','
         << format_double(dataset.returns(i, s));
      for (int a = 0; a < k; ++a)
        os << ',' << format_double(dataset.covariates[i](s, a));
      os << "\n";
    }
  }
  atomic_write(path, os.str());
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
  const auto& st = truth.state;
  json j;
  j["beta"] = matrix_to_json(st.coeffs.beta);
  j["lambda"] = matrix_to_json(st.loadings.lambda);
  j["f"] = matrix_to_json(st.factors.f);
  j["h"] = matrix_to_json(st.logvols.h);
  j["q"] = matrix_to_json(st.logvols.q);
  j["alpha0"] = vector_to_json(st.volcoeffs.alpha0);
  j["alpha1"] = vector_to_json(st.volcoeffs.alpha1);
  j["phi0"] = vector_to_json(st.volcoeffs.phi0);
  j["phi1"] = vector_to_json(st.volcoeffs.phi1);
  j["sigma2_v"] = vector_to_json(st.volcoeffs.sigma2_v);
  j["sigma2_w"] = vector_to_json(st.volcoeffs.sigma2_w);
  j["sigma2_err"] = vector_to_json(st.scales.sigma2_err);
  j["vartheta"] = vector_to_json(st.scales.vartheta);
  j["delta_sigma"] = st.scales.delta_sigma;
  j["phi_acf"] = vector_to_json(st.scales.phi_acf);
  j["mixture_indicators"] = imatrix_to_json(st.mixture_indicators);
  atomic_write(path, j.dump(1));
}

GroundTruth read_ground_truth(const std::string& path) {
  json j = parse_json(read_file(path), path);
  GroundTruth truth;
  auto& st = truth.state;
  st.coeffs.beta = matrix_from_json(j.at("beta"), "beta");
  st.loadings.lambda = matrix_from_json(j.at("lambda"), "lambda");
  st.factors.f = matrix_from_json(j.at("f"), "f");
  st.logvols.h = matrix_from_json(j.at("h"), "h");
  st.logvols.q = matrix_from_json(j.at("q"), "q");
  st.volcoeffs.alpha0 = vector_from_json(j.at("alpha0"), "alpha0");
  st.volcoeffs.alpha1 = vector_from_json(j.at("alpha1"), "alpha1");
  st.volcoeffs.phi0 = vector_from_json(j.at("phi0"), "phi0");
  st.volcoeffs.phi1 = vector_from_json(j.at("phi1"), "phi1");
  st.volcoeffs.sigma2_v = vector_from_json(j.at("sigma2_v"), "sigma2_v");
  st.volcoeffs.sigma2_w = vector_from_json(j.at("sigma2_w"), "sigma2_w");
  st.scales.sigma2_err = vector_from_json(j.at("sigma2_err"), "sigma2_err");
  st.scales.vartheta = vector_from_json(j.at("vartheta"), "vartheta");
  st.scales.delta_sigma = j.at("delta_sigma").get<double>();
  st.scales.phi_acf = vector_from_json(j.at("phi_acf"), "phi_acf");
  st.mixture_indicators =
      imatrix_from_json(j.at("mixture_indicators"), "mixture_indicators");
  return truth;
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

PriorConfig load_prior_config(const std::string& path) {
  json j = parse_json(read_file(path), path);
  check_known_keys(j, {"regression", "loading", "volatility"}, path);
  PriorConfig cfg;
  if (j.contains("regression")) {
    const json& r = j["regression"];
    check_known_keys(r,
                     {"mu_beta_prior_mean", "mu_beta_prior_cov", "wishart_dof",
                      "wishart_scale", "nu_sigma", "delta_sigma0", "nu_sigma0",
                      "nu_vartheta", "t_proposal_dof"},
                     path + ":regression");
    auto& c = cfg.regression;
    if (r.contains("mu_beta_prior_mean")) c.mu_beta_prior_mean = r["mu_beta_prior_mean"];
    if (r.contains("mu_beta_prior_cov")) c.mu_beta_prior_cov = r["mu_beta_prior_cov"];
    if (r.contains("wishart_dof")) c.wishart_dof = r["wishart_dof"];
    if (r.contains("wishart_scale")) c.wishart_scale = r["wishart_scale"];
    if (r.contains("nu_sigma")) c.nu_sigma = r["nu_sigma"];
    if (r.contains("delta_sigma0")) c.delta_sigma0 = r["delta_sigma0"];
    if (r.contains("nu_sigma0")) c.nu_sigma0 = r["nu_sigma0"];
    if (r.contains("nu_vartheta")) c.nu_vartheta = r["nu_vartheta"];
    if (r.contains("t_proposal_dof")) c.t_proposal_dof = r["t_proposal_dof"];
  }
  if (j.contains("loading")) {
    const json& r = j["loading"];
    check_known_keys(
        r, {"c_prior_var", "nu_lambda", "delta_lambda", "s2_lambda", "t_dof"},
        path + ":loading");
    auto& c = cfg.loading;
    if (r.contains("c_prior_var")) c.c_prior_var = r["c_prior_var"];
    if (r.contains("nu_lambda")) c.nu_lambda = r["nu_lambda"];
    if (r.contains("delta_lambda")) c.delta_lambda = r["delta_lambda"];
    if (r.contains("s2_lambda")) c.s2_lambda = r["s2_lambda"];
    if (r.contains("t_dof")) c.t_dof = r["t_dof"];
  }
  if (j.contains("volatility")) {
    const json& r = j["volatility"];
    check_known_keys(r,
                     {"coef_prior_mean_intercept", "coef_prior_mean_slope",
                      "coef_prior_var_intercept", "coef_prior_var_slope", "nu_h",
                      "s2_h", "init_mean", "init_var", "offset_scale"},
                     path + ":volatility");
    auto& c = cfg.volatility;
    if (r.contains("coef_prior_mean_intercept"))
      c.coef_prior_mean_intercept = r["coef_prior_mean_intercept"];
    if (r.contains("coef_prior_mean_slope"))
      c.coef_prior_mean_slope = r["coef_prior_mean_slope"];
    if (r.contains("coef_prior_var_intercept"))
      c.coef_prior_var_intercept = r["coef_prior_var_intercept"];
    if (r.contains("coef_prior_var_slope"))
      c.coef_prior_var_slope = r["coef_prior_var_slope"];
    if (r.contains("nu_h")) c.nu_h = r["nu_h"];
    if (r.contains("s2_h")) c.s2_h = r["s2_h"];
    if (r.contains("init_mean")) c.init_mean = r["init_mean"];
    if (r.contains("init_var")) c.init_var = r["init_var"];
    if (r.contains("offset_scale")) c.offset_scale = r["offset_scale"];
  }
  cfg.validate();
  return cfg;
}

ChainConfig load_chain_config(const std::string& path) {
  json j = parse_json(read_file(path), path);
  check_known_keys(j,
                   {"n_iter", "burn_in", "thin", "seed", "path_thin",
                    "retry_budget_truncated", "retry_budget_stationarity",
                    "checkpoint_every", "checkpoint_path", "resume_from"},
                   path);
  ChainConfig cfg;
  if (j.contains("n_iter")) cfg.n_iter = j["n_iter"];
  if (j.contains("burn_in")) cfg.burn_in = j["burn_in"];
  if (j.contains("thin")) cfg.thin = j["thin"];
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("path_thin")) cfg.path_thin = j["path_thin"];
  if (j.contains("retry_budget_truncated"))
    cfg.retry_budget_truncated = j["retry_budget_truncated"];
  if (j.contains("retry_budget_stationarity"))
    cfg.retry_budget_stationarity = j["retry_budget_stationarity"];
  if (j.contains("checkpoint_every")) cfg.checkpoint_every = j["checkpoint_every"];
  if (j.contains("checkpoint_path")) cfg.checkpoint_path = j["checkpoint_path"];
  if (j.contains("resume_from")) cfg.resume_from = j["resume_from"];
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

namespace {

json priors_to_json(const PriorConfig& p) {
  return json{
      {"regression",
       {{"mu_beta_prior_mean", p.regression.mu_beta_prior_mean},
        {"mu_beta_prior_cov", p.regression.mu_beta_prior_cov},
        {"wishart_dof", p.regression.wishart_dof},
        {"wishart_scale", p.regression.wishart_scale},
        {"nu_sigma", p.regression.nu_sigma},
        {"delta_sigma0", p.regression.delta_sigma0},
        {"nu_sigma0", p.regression.nu_sigma0},
        {"nu_vartheta", p.regression.nu_vartheta},
        {"t_proposal_dof", p.regression.t_proposal_dof}}},
      {"loading",
       {{"c_prior_var", p.loading.c_prior_var},
        {"nu_lambda", p.loading.nu_lambda},
        {"delta_lambda", p.loading.delta_lambda},
        {"s2_lambda", p.loading.s2_lambda},
        {"t_dof", p.loading.t_dof}}},
      {"volatility",
       {{"coef_prior_mean_intercept", p.volatility.coef_prior_mean_intercept},
        {"coef_prior_mean_slope", p.volatility.coef_prior_mean_slope},
        {"coef_prior_var_intercept", p.volatility.coef_prior_var_intercept},
        {"coef_prior_var_slope", p.volatility.coef_prior_var_slope},
        {"nu_h", p.volatility.nu_h},
        {"s2_h", p.volatility.s2_h},
        {"init_mean", p.volatility.init_mean},
        {"init_var", p.volatility.init_var},
        {"offset_scale", p.volatility.offset_scale}}}};
}

PriorConfig priors_from_json(const json& j) {
  PriorConfig p;
  const json& r = j.at("regression");
  p.regression.mu_beta_prior_mean = r.at("mu_beta_prior_mean");
  p.regression.mu_beta_prior_cov = r.at("mu_beta_prior_cov");
  p.regression.wishart_dof = r.at("wishart_dof");
  p.regression.wishart_scale = r.at("wishart_scale");
  p.regression.nu_sigma = r.at("nu_sigma");
  p.regression.delta_sigma0 = r.at("delta_sigma0");
  p.regression.nu_sigma0 = r.at("nu_sigma0");
  p.regression.nu_vartheta = r.at("nu_vartheta");
  p.regression.t_proposal_dof = r.at("t_proposal_dof");
  const json& l = j.at("loading");
  p.loading.c_prior_var = l.at("c_prior_var");
  p.loading.nu_lambda = l.at("nu_lambda");
  p.loading.delta_lambda = l.at("delta_lambda");
  p.loading.s2_lambda = l.at("s2_lambda");
  p.loading.t_dof = l.at("t_dof");
  const json& v = j.at("volatility");
  p.volatility.coef_prior_mean_intercept = v.at("coef_prior_mean_intercept");
  p.volatility.coef_prior_mean_slope = v.at("coef_prior_mean_slope");
  p.volatility.coef_prior_var_intercept = v.at("coef_prior_var_intercept");
  p.volatility.coef_prior_var_slope = v.at("coef_prior_var_slope");
  p.volatility.nu_h = v.at("nu_h");
  p.volatility.s2_h = v.at("s2_h");
  p.volatility.init_mean = v.at("init_mean");
  p.volatility.init_var = v.at("init_var");
  p.volatility.offset_scale = v.at("offset_scale");
  return p;
}

json chain_to_json(const ChainConfig& c) {
  return json{{"n_iter", c.n_iter},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"seed", c.seed},
              {"path_thin", c.path_thin},
              {"retry_budget_truncated", c.retry_budget_truncated},
              {"retry_budget_stationarity", c.retry_budget_stationarity},
              {"checkpoint_every", c.checkpoint_every},
              {"checkpoint_path", c.checkpoint_path},
              {"resume_from", c.resume_from}};
}

ChainConfig chain_from_json(const json& j) {
  ChainConfig c;
  c.n_iter = j.at("n_iter");
  c.burn_in = j.at("burn_in");
  c.thin = j.at("thin");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.path_thin = j.at("path_thin");
  c.retry_budget_truncated = j.at("retry_budget_truncated");
  c.retry_budget_stationarity = j.at("retry_budget_stationarity");
  c.checkpoint_every = j.at("checkpoint_every");
  c.checkpoint_path = j.at("checkpoint_path");
  c.resume_from = j.at("resume_from");
  return c;
}

}  // namespace

void write_manifest(const RunManifest& manifest, const std::string& path) {
  json j;
  j["artifact_version"] = manifest.artifact_version;
  j["dataset_digest"] = manifest.dataset_digest;
  j["config_hash"] = manifest.config_hash;
  j["n_individuals"] = manifest.n_individuals;
  j["n_periods"] = manifest.n_periods;
  j["n_covariates"] = manifest.n_covariates;
  j["n_factors"] = manifest.n_factors;
  j["scenario"] = manifest.scenario;
  j["individual_ids"] = manifest.individual_ids;
  j["seed"] = manifest.seed;
  j["no_intercept"] = manifest.no_intercept;
  j["priors"] = priors_to_json(manifest.priors);
  j["chain"] = chain_to_json(manifest.chain);
  atomic_write(path, j.dump(1));
}

RunManifest read_manifest(const std::string& path) {
  json j = parse_json(read_file(path), path);
  RunManifest m;
  m.artifact_version = j.at("artifact_version");
  m.dataset_digest = j.at("dataset_digest");
  m.config_hash = j.at("config_hash");
  m.n_individuals = j.at("n_individuals");
  m.n_periods = j.at("n_periods");
  m.n_covariates = j.at("n_covariates");
  m.n_factors = j.at("n_factors");
  m.scenario = j.at("scenario");
  if (j.contains("individual_ids"))
    m.individual_ids = j.at("individual_ids").get<std::vector<std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.no_intercept = j.at("no_intercept");
  m.priors = priors_from_json(j.at("priors"));
  m.chain = chain_from_json(j.at("chain"));
  return m;
}

// ---------------------------------------------------------------------------
// Draws / summaries
// ---------------------------------------------------------------------------

void write_draws_csv(const ChainOutput& output, const ChainConfig& chain,
                     const std::string& path) {
  std::ostringstream os;
  os << "sweep,parameter,value\n";
  for (int r = 0; r < output.n_retained; ++r) {
    long sweep = chain.burn_in + static_cast<long>(r + 1) * chain.thin;
    for (std::size_t c = 0; c < output.trace_names.size(); ++c)
      os << sweep << ',' << output.trace_names[c] << ','
         << format_double(output.traces(r, static_cast<int>(c))) << "\n";
  }
  atomic_write(path, os.str());
}

DrawsFile read_draws_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) !=
                                     std::vector<std::string>{"sweep", "parameter",
                                                              "value"})
    fail(ErrorCode::parse, path + ": expected header sweep,parameter,value");

  DrawsFile out;
  std::map<std::string, int> name_index;
  std::vector<long> sweeps;
  std::map<long, int> sweep_index;
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 3) fail(ErrorCode::parse, ctx + ": expected 3 fields");
    long sweep = parse_long(f[0], ctx);
    double value = parse_double(f[2], ctx);
    auto [nit, nins] =
        name_index.try_emplace(f[1], static_cast<int>(name_index.size()));
    if (nins) out.trace_names.push_back(f[1]);
    auto [sit, sins] =
        sweep_index.try_emplace(sweep, static_cast<int>(sweeps.size()));
    if (sins) {
      sweeps.push_back(sweep);
      rows.emplace_back();
    }
    auto& row = rows[sit->second];
    if (row.size() < name_index.size()) row.resize(name_index.size(), 0.0);
    row[nit->second] = value;
  }
  out.sweeps = sweeps;
  out.traces.resize(static_cast<int>(rows.size()),
                    static_cast<int>(out.trace_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].resize(out.trace_names.size(), 0.0);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out.traces(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return out;
}

void write_summary_csv(const SummaryTable& summary, const std::string& path) {
  std::ostringstream os;
  os << "param";
  for (const auto& c : summary.column_labels) os << ',' << c;
  os << "\n";
  const int k = static_cast<int>(summary.row_labels.size());
  const int n = static_cast<int>(summary.column_labels.size());
  for (int j = 0; j < k; ++j) {
    os << summary.row_labels[j];
    for (int i = 0; i < n; ++i) os << ',' << format_double(summary.mean(j, i));
    os << "\n";
    os << "t-value";
    for (int i = 0; i < n; ++i) {
      double tv = summary.t(j, i);
      os << ',' << (std::isfinite(tv) ? format_double(tv)
                                      : (tv > 0 ? "inf" : "-inf"));
    }
    os << "\n";
  }
  atomic_write(path, os.str());
}

namespace {

json summary_to_json(const SummaryTable& summary) {
  json rows = json::array();
  const int k = static_cast<int>(summary.row_labels.size());
  const int n = static_cast<int>(summary.column_labels.size());
  for (int j = 0; j < k; ++j) {
    json row;
    row["param"] = summary.row_labels[j];
    json means = json::array(), sds = json::array(), ts = json::array();
    for (int i = 0; i < n; ++i) {
      means.push_back(summary.mean(j, i));
      sds.push_back(summary.sd(j, i));
      double tv = summary.t(j, i);
      if (std::isfinite(tv))
        ts.push_back(tv);
      else
        ts.push_back(tv > 0 ? "inf" : "-inf");
    }
    row["mean"] = means;
    row["sd"] = sds;
    row["t"] = ts;
    rows.push_back(row);
  }
  return json{{"individuals", summary.column_labels}, {"coefficients", rows}};
}

void write_matrix_csv(const MatrixXd& m, const std::string& prefix,
                      const std::string& path) {
  std::ostringstream os;
  os << "series,period,mean\n";
  for (int i = 0; i < m.rows(); ++i)
    for (int s = 0; s < m.cols(); ++s)
      os << prefix << '.' << (i + 1) << ',' << (s + 1) << ','
         << format_double(m(i, s)) << "\n";
  atomic_write(path, os.str());
}

}  // namespace

std::vector<std::string> write_outputs(const ChainOutput& output,
                                       const SummaryTable& summary,
                                       const RunManifest& manifest,
                                       const std::string& dir) {
  if (dir.empty()) fail(ErrorCode::io, "write_outputs: empty output directory");
  fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base, ec);
  if (!fs::is_directory(base))
    fail(ErrorCode::io, "write_outputs: cannot create directory '" + dir + "'");

  std::vector<std::string> written;
  auto at = [&](const char* name) { return (base / name).string(); };

  write_draws_csv(output, manifest.chain, at("draws.csv"));
  written.push_back("draws.csv");
  write_summary_csv(summary, at("summary.csv"));
  written.push_back("summary.csv");
  atomic_write(at("summary.json"), summary_to_json(summary).dump(1));
  written.push_back("summary.json");
  write_manifest(manifest, at("manifest.json"));
  written.push_back("manifest.json");

  json info;
  info["n_retained"] = output.n_retained;
  info["n_validation_failures"] = output.n_validation_failures;
  info["acceptance_rates"] = output.acceptance_rates;
  atomic_write(at("chain_info.json"), info.dump(1));
  written.push_back("chain_info.json");

  write_matrix_csv(output.h_mean, "h", at("latent_h_mean.csv"));
  written.push_back("latent_h_mean.csv");
  if (output.q_mean.rows() > 0) {
    write_matrix_csv(output.q_mean, "q", at("latent_q_mean.csv"));
    written.push_back("latent_q_mean.csv");
    write_matrix_csv(output.f_mean, "f", at("latent_f_mean.csv"));
    written.push_back("latent_f_mean.csv");
  }
  return written;
}

SummaryTable summarize_chain_dir(const std::string& dir) {
  fs::path base(dir);
  RunManifest manifest = read_manifest((base / "manifest.json").string());
  DrawsFile draws = read_draws_csv((base / "draws.csv").string());

  ChainOutput out;
  out.trace_names = draws.trace_names;
  out.traces = draws.traces;
  out.n_retained = static_cast<int>(draws.traces.rows());
  out.n_individuals = manifest.n_individuals;
  out.n_covariates = manifest.n_covariates;
  out.n_factors = manifest.n_factors;
  out.has_intercept = !manifest.no_intercept;
  return summarize(out, manifest.individual_ids);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const ChainCheckpoint& cp, const std::string& path) {
  json j;
  j["format"] = "panelsv-checkpoint-v1";
  j["config_hash"] = cp.config_hash;
  j["retained"] = cp.retained;
  j["phi_attempts"] = cp.phi_attempts;
  j["phi_accepts"] = cp.phi_accepts;
  j["load_attempts"] = cp.load_attempts;
  j["load_accepts"] = cp.load_accepts;
  j["n_validation_failures"] = cp.n_validation_failures;

  const ChainState& st = cp.state;
  json s;
  s["next_sweep"] = st.next_sweep;
  s["rng_state"] = st.rng_state;
  s["beta"] = matrix_to_json(st.param.coeffs.beta);
  s["lambda"] = matrix_to_json(st.param.loadings.lambda);
  s["f"] = matrix_to_json(st.param.factors.f);
  s["h"] = matrix_to_json(st.param.logvols.h);
  s["q"] = matrix_to_json(st.param.logvols.q);
  s["alpha0"] = vector_to_json(st.param.volcoeffs.alpha0);
  s["alpha1"] = vector_to_json(st.param.volcoeffs.alpha1);
  s["phi0"] = vector_to_json(st.param.volcoeffs.phi0);
  s["phi1"] = vector_to_json(st.param.volcoeffs.phi1);
  s["sigma2_v"] = vector_to_json(st.param.volcoeffs.sigma2_v);
  s["sigma2_w"] = vector_to_json(st.param.volcoeffs.sigma2_w);
  s["sigma2_err"] = vector_to_json(st.param.scales.sigma2_err);
  s["vartheta"] = vector_to_json(st.param.scales.vartheta);
  s["delta_sigma"] = st.param.scales.delta_sigma;
  s["phi_acf"] = vector_to_json(st.param.scales.phi_acf);
  s["mixture_indicators"] = imatrix_to_json(st.param.mixture_indicators);
  s["mu_beta"] = vector_to_json(st.mu_beta);
  s["v_beta_inv"] = matrix_to_json(st.v_beta_inv);
  s["sigma_lambda"] = st.sigma_lambda;
  s["phi_hat"] = vector_to_json(st.phi_hat);
  s["phi_var"] = vector_to_json(st.phi_var);
  j["state"] = std::move(s);

  j["traces"] = matrix_to_json(cp.traces);
  j["h_sum"] = matrix_to_json(cp.h_sum);
  j["q_sum"] = matrix_to_json(cp.q_sum);
  j["f_sum"] = matrix_to_json(cp.f_sum);
  json hs = json::array(), qs = json::array(), fsn = json::array();
  for (const auto& m : cp.h_snapshots) hs.push_back(matrix_to_json(m));
  for (const auto& m : cp.q_snapshots) qs.push_back(matrix_to_json(m));
  for (const auto& m : cp.f_snapshots) fsn.push_back(matrix_to_json(m));
  j["h_snapshots"] = std::move(hs);
  j["q_snapshots"] = std::move(qs);
  j["f_snapshots"] = std::move(fsn);
  atomic_write(path, j.dump());
}

ChainCheckpoint load_checkpoint(const std::string& path) {
  json j = parse_json(read_file(path), path);
  if (j.value("format", "") != "panelsv-checkpoint-v1")
    fail(ErrorCode::parse, path + ": not a panelsv checkpoint");
  ChainCheckpoint cp;
  cp.config_hash = j.at("config_hash");
  cp.retained = j.at("retained");
  cp.phi_attempts = j.at("phi_attempts");
  cp.phi_accepts = j.at("phi_accepts");
  cp.load_attempts = j.at("load_attempts");
  cp.load_accepts = j.at("load_accepts");
  cp.n_validation_failures = j.at("n_validation_failures");

  const json& s = j.at("state");
  ChainState& st = cp.state;
  st.next_sweep = s.at("next_sweep");
  st.rng_state = s.at("rng_state");
  st.param.coeffs.beta = matrix_from_json(s.at("beta"), "beta");
  st.param.loadings.lambda = matrix_from_json(s.at("lambda"), "lambda");
  st.param.factors.f = matrix_from_json(s.at("f"), "f");
  st.param.logvols.h = matrix_from_json(s.at("h"), "h");
  st.param.logvols.q = matrix_from_json(s.at("q"), "q");
  st.param.volcoeffs.alpha0 = vector_from_json(s.at("alpha0"), "alpha0");
  st.param.volcoeffs.alpha1 = vector_from_json(s.at("alpha1"), "alpha1");
  st.param.volcoeffs.phi0 = vector_from_json(s.at("phi0"), "phi0");
  st.param.volcoeffs.phi1 = vector_from_json(s.at("phi1"), "phi1");
  st.param.volcoeffs.sigma2_v = vector_from_json(s.at("sigma2_v"), "sigma2_v");
  st.param.volcoeffs.sigma2_w = vector_from_json(s.at("sigma2_w"), "sigma2_w");
  st.param.scales.sigma2_err = vector_from_json(s.at("sigma2_err"), "sigma2_err");
  st.param.scales.vartheta = vector_from_json(s.at("vartheta"), "vartheta");
  st.param.scales.delta_sigma = s.at("delta_sigma");
  st.param.scales.phi_acf = vector_from_json(s.at("phi_acf"), "phi_acf");
  st.param.mixture_indicators =
      imatrix_from_json(s.at("mixture_indicators"), "mixture_indicators");
  st.mu_beta = vector_from_json(s.at("mu_beta"), "mu_beta");
  st.v_beta_inv = matrix_from_json(s.at("v_beta_inv"), "v_beta_inv");
  st.sigma_lambda = s.at("sigma_lambda");
  st.phi_hat = vector_from_json(s.at("phi_hat"), "phi_hat");
  st.phi_var = vector_from_json(s.at("phi_var"), "phi_var");

  cp.traces = matrix_from_json(j.at("traces"), "traces");
  cp.h_sum = matrix_from_json(j.at("h_sum"), "h_sum");
  cp.q_sum = matrix_from_json(j.at("q_sum"), "q_sum");
  cp.f_sum = matrix_from_json(j.at("f_sum"), "f_sum");
  for (const auto& m : j.at("h_snapshots"))
    cp.h_snapshots.push_back(matrix_from_json(m, "h_snapshots"));
  for (const auto& m : j.at("q_snapshots"))
    cp.q_snapshots.push_back(matrix_from_json(m, "q_snapshots"));
  for (const auto& m : j.at("f_snapshots"))
    cp.f_snapshots.push_back(matrix_from_json(m, "f_snapshots"));
  return cp;
}

}  // namespace panelsv
