#pragma once

// JSON model configuration and CSV observation loading.
//
// {
//   "states": 2,
//   "parameterization": "gaussian-means" | "softmax-full" | "emission-table",
//   "psi": [...],
//   "sigma": 1.0,                        (gaussian-means, softmax-full)
//   "gamma": [[0.9, 0.2], [0.1, 0.8]],   (row-major; columns sum to 1:
//                                         gamma[i][j] = p(next = i | current = j))
//   "rho": [0.5, 0.5],
//   "symbols": 2,                        (emission-table)
//   "observations": "obs.csv"            (relative to the config file)
// }

#include "seqadj/hmm/builtin.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace seqadj::hmm {

/// One observation per row; blank lines and '#' comments are skipped, and a
/// non-numeric first row is taken as a header. Only the first column is read.
inline std::vector<double> read_observations_csv(std::istream& in,
                                                 const std::string& source = "observations") {
  std::vector<double> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::string cell = line.substr(first, line.find(',', first) - first);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cell.size() || cell.empty()) {
      if (out.empty() && row == 1) continue;  // header
      throw ConfigError(source + ": row " + std::to_string(row) + " is not a number");
    }
    out.push_back(value);
  }
  return out;
}

inline std::vector<double> load_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("observations: cannot open '" + path.string() + "'");
  return read_observations_csv(in, path.string());
}

struct HmmSetup {
  std::string parameterization;
  HmmOptions options;
  Vector psi;
  std::vector<double> observations;
  std::unique_ptr<HmmModel> model;
};

namespace detail {

inline ConfigError field_error(const std::string& field, const std::string& what) {
  return ConfigError("config field '" + field + "': " + what);
}

inline std::vector<double> number_list(const nlohmann::json& v, const std::string& field) {
  if (!v.is_array()) throw field_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw field_error(field, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline Vector to_vector(const std::vector<double>& xs) {
  return Eigen::Map<const Vector>(xs.data(), Index(xs.size()));
}

inline Matrix parse_gamma(const nlohmann::json& v, Index m) {
  if (!v.is_array()) throw field_error("gamma", "expected an M x M array");
  Matrix g(m, m);
  if (!v.empty() && v.front().is_array()) {
    if (Index(v.size()) != m) throw field_error("gamma", "expected " + std::to_string(m) + " rows");
    for (Index i = 0; i < m; ++i) {
      const auto row = number_list(v[std::size_t(i)], "gamma");
      if (Index(row.size()) != m) throw field_error("gamma", "row " + std::to_string(i) + " has wrong length");
      for (Index j = 0; j < m; ++j) g(i, j) = row[std::size_t(j)];
    }
  } else {
    const auto flat = number_list(v, "gamma");
    if (Index(flat.size()) != m * m) throw field_error("gamma", "expected M*M entries");
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) g(i, j) = flat[std::size_t(i * m + j)];
  }
  for (Index j = 0; j < m; ++j)
    if (std::abs(g.col(j).sum() - 1.0) > 1e-12)
      throw field_error("gamma", "column " + std::to_string(j) +
                                     " does not sum to 1 (gamma[i][j] = p(next=i | current=j))");
  return g;
}

}  // namespace detail

/// Builds a model from a parsed config. Relative observation paths resolve
/// against `base_dir`.
inline HmmSetup parse_hmm_config(const nlohmann::json& cfg,
                                 const std::filesystem::path& base_dir = ".") {
  using detail::field_error;
  if (!cfg.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::vector<std::string> known{"states", "parameterization", "psi", "sigma",
                                              "gamma", "rho", "symbols", "observations"};
  for (const auto& item : cfg.items())
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw field_error(item.key(), "unknown field");

  HmmSetup setup;
  if (!cfg.contains("states") || !cfg["states"].is_number_integer())
    throw field_error("states", "required integer");
  setup.options.states = cfg["states"].get<Index>();
  if (setup.options.states < 1) throw field_error("states", "must be >= 1");
  const Index m = setup.options.states;

  if (!cfg.contains("parameterization") || !cfg["parameterization"].is_string())
    throw field_error("parameterization", "required string");
  setup.parameterization = cfg["parameterization"].get<std::string>();
  const auto& names = builtin_hmm_names();
  if (std::find(names.begin(), names.end(), setup.parameterization) == names.end())
    throw field_error("parameterization", "unknown '" + setup.parameterization + "'");

  if (cfg.contains("sigma")) {
    if (!cfg["sigma"].is_number()) throw field_error("sigma", "expected a number");
    setup.options.sigma = cfg["sigma"].get<double>();
    if (!(setup.options.sigma > 0.0)) throw field_error("sigma", "must be > 0");
  }
  if (cfg.contains("gamma")) setup.options.gamma = detail::parse_gamma(cfg["gamma"], m);
  if (cfg.contains("rho")) {
    const auto r = detail::number_list(cfg["rho"], "rho");
    if (Index(r.size()) != m) throw field_error("rho", "expected " + std::to_string(m) + " entries");
    setup.options.rho = detail::to_vector(r);
  }
  if (cfg.contains("symbols")) {
    if (!cfg["symbols"].is_number_integer()) throw field_error("symbols", "expected an integer");
    setup.options.symbols = cfg["symbols"].get<Index>();
  }
  if (setup.parameterization == "emission-table" && setup.options.symbols < 1)
    throw field_error("symbols", "required (>= 1) for emission-table");

  if (!cfg.contains("observations") || !cfg["observations"].is_string())
    throw field_error("observations", "required path string");
  std::filesystem::path obs_path = cfg["observations"].get<std::string>();
  if (obs_path.is_relative()) obs_path = base_dir / obs_path;
  try {
    setup.observations = load_observations_csv(obs_path);
  } catch (const ConfigError& e) {
    throw field_error("observations", e.what());
  }

  try {
    setup.model = builtin_hmm(setup.parameterization, setup.options, setup.observations);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw field_error(colon == std::string::npos ? "model" : msg.substr(0, colon), msg);
  }

  if (!cfg.contains("psi")) throw field_error("psi", "required array");
  const auto psi = detail::number_list(cfg["psi"], "psi");
  if (Index(psi.size()) != setup.model->param_dim())
    throw field_error("psi", "expected " + std::to_string(setup.model->param_dim()) +
                                 " entries for " + setup.parameterization);
  setup.psi = detail::to_vector(psi);
  try {
    check_model(*setup.model, setup.psi);
  } catch (const Error& e) {
    throw field_error("psi", std::string("model invalid at psi: ") + e.what());
  }
  return setup;
}

inline HmmSetup load_hmm_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  nlohmann::json cfg;
  try {
    in >> cfg;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }
  return parse_hmm_config(cfg, path.parent_path());
}

}  // namespace seqadj::hmm
