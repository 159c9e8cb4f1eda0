#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simulate.hpp"
#include "state_space.hpp"

namespace srlg {

// Bad user input: unknown keys, malformed files, out-of-range settings.
// Distinct from NumericalError so the CLI can map it to its own exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything the command line accepts. File values override these defaults,
// flags override file values; the resolved struct is echoed next to results.
struct RunConfig {
  std::string model = "example1";  // example1 | example3 | custom
  std::string model_file;          // JSON model description when custom
  std::vector<double> theta;       // evaluation point; empty = model default
  double delta_t = 0.1;            // example1 sampling interval
  double delta = 1e-2;             // example3 collinearity parameter
  int N = 100;
  std::uint64_t seed = 1;
  double tau_star = 5.0;           // parameter the dataset is simulated at
  std::vector<double> delta_list;  // empty = per-experiment default
  std::vector<double> tau_grid;    // empty = 20 points spanning [2, 10]
  std::vector<double> z1 = {1.0, 1.0};
  double mu_max = 10.0;
  std::string out;
  std::string format = "csv";  // csv | md
  std::string method = "both";  // sqrt | conventional | both
  bool zero_noise = false;
};

inline std::vector<double> default_tau_grid() {
  std::vector<double> grid(20);
  for (int i = 0; i < 20; ++i) grid[i] = 2.0 + 8.0 * i / 19.0;
  return grid;
}

namespace detail {

inline double number_from_json(const nlohmann::json& j,
                               const std::string& what) {
  if (!j.is_number())
    throw ConfigError("config: " + what + " must be a number");
  return j.get<double>();
}

inline std::vector<double> number_list_from_json(const nlohmann::json& j,
                                                 const std::string& what) {
  if (!j.is_array())
    throw ConfigError("config: " + what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(number_from_json(v, what));
  return out;
}

inline std::string string_from_json(const nlohmann::json& j,
                                    const std::string& what) {
  if (!j.is_string())
    throw ConfigError("config: " + what + " must be a string");
  return j.get<std::string>();
}

}  // namespace detail

// Applies one JSON object onto a config. Unknown keys are rejected rather
// than ignored so a typo cannot silently fall back to a default.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "model")
      cfg.model = detail::string_from_json(value, key);
    else if (key == "model_file")
      cfg.model_file = detail::string_from_json(value, key);
    else if (key == "theta")
      cfg.theta = detail::number_list_from_json(value, key);
    else if (key == "delta_t")
      cfg.delta_t = detail::number_from_json(value, key);
    else if (key == "delta")
      cfg.delta = detail::number_from_json(value, key);
    else if (key == "N") {
      double n = detail::number_from_json(value, key);
      if (n != static_cast<int>(n))
        throw ConfigError("config: N must be an integer");
      cfg.N = static_cast<int>(n);
    } else if (key == "seed") {
      if (!value.is_number_unsigned())
        throw ConfigError("config: seed must be a nonnegative integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "tau_star")
      cfg.tau_star = detail::number_from_json(value, key);
    else if (key == "delta_list")
      cfg.delta_list = detail::number_list_from_json(value, key);
    else if (key == "tau_grid")
      cfg.tau_grid = detail::number_list_from_json(value, key);
    else if (key == "z1")
      cfg.z1 = detail::number_list_from_json(value, key);
    else if (key == "mu_max")
      cfg.mu_max = detail::number_from_json(value, key);
    else if (key == "out")
      cfg.out = detail::string_from_json(value, key);
    else if (key == "format")
      cfg.format = detail::string_from_json(value, key);
    else if (key == "method")
      cfg.method = detail::string_from_json(value, key);
    else if (key == "zero_noise") {
      if (!value.is_boolean())
        throw ConfigError("config: zero_noise must be a boolean");
      cfg.zero_noise = value.get<bool>();
    } else
      throw ConfigError("config: unknown key '" + key + "'");
  }
}

inline nlohmann::json parse_json_file(const std::string& path,
                                      const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(what + ": cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(what + ": " + path + ": " + e.what());
  }
  return j;
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  apply_config_json(cfg, parse_json_file(path, "config"));
}

// The resolved settings, in declaration order, for the output-directory echo.
inline nlohmann::ordered_json effective_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = cfg.model;
  j["model_file"] = cfg.model_file;
  j["theta"] = cfg.theta;
  j["delta_t"] = cfg.delta_t;
  j["delta"] = cfg.delta;
  j["N"] = cfg.N;
  j["seed"] = cfg.seed;
  j["tau_star"] = cfg.tau_star;
  j["delta_list"] = cfg.delta_list;
  j["tau_grid"] = cfg.tau_grid;
  j["z1"] = cfg.z1;
  j["mu_max"] = cfg.mu_max;
  j["out"] = cfg.out;
  j["format"] = cfg.format;
  j["method"] = cfg.method;
  j["zero_noise"] = cfg.zero_noise;
  j["generator"] = kGeneratorName;
  return j;
}

namespace detail {

inline Matrix<double> matrix_from_json(const nlohmann::json& j,
                                       const std::string& what) {
  // A flat number list is accepted as a column vector.
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    Matrix<double> col(static_cast<int>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i)
      col(static_cast<int>(i), 0) = number_from_json(j[i], what);
    return col;
  }
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("model: " + what + " must be an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  if (cols == 0) throw ConfigError("model: " + what + " has an empty row");
  Matrix<double> out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw ConfigError("model: " + what + " rows have unequal lengths");
    for (int c = 0; c < cols; ++c)
      out(r, c) = number_from_json(j[r][c], what);
  }
  return out;
}

inline std::vector<Matrix<double>> stack_from_json(const nlohmann::json& j,
                                                   const std::string& what) {
  if (!j.is_array())
    throw ConfigError("model: " + what + " must be an array of matrices");
  std::vector<Matrix<double>> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(matrix_from_json(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

inline int dim_from_json(const nlohmann::json& dims, const char* key) {
  if (!dims.contains(key) || !dims[key].is_number_unsigned())
    throw ConfigError(std::string("model: dims.") + key +
                      " must be a nonnegative integer");
  return dims[key].get<int>();
}

}  // namespace detail

// A model given as literal matrices: the system and its parameter
// derivatives evaluated at one operating point. The builder ignores theta,
// so gradients of genuinely parameter-free blocks come out exactly zero.
inline ModelSpec<double> model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: top level must be an object");
  if (!j.contains("dims")) throw ConfigError("model: missing dims");
  Dimensions dims;
  dims.n = detail::dim_from_json(j["dims"], "n");
  dims.m = detail::dim_from_json(j["dims"], "m");
  dims.q = detail::dim_from_json(j["dims"], "q");
  dims.p = detail::dim_from_json(j["dims"], "p");

  SystemMatrices<double> sys;
  auto require = [&j](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      throw ConfigError(std::string("model: missing ") + key);
    return j[key];
  };
  sys.F = detail::matrix_from_json(require("F"), "F");
  sys.G = detail::matrix_from_json(require("G"), "G");
  sys.H = detail::matrix_from_json(require("H"), "H");
  sys.Q = detail::matrix_from_json(require("Q"), "Q");
  sys.R = detail::matrix_from_json(require("R"), "R");
  sys.Pi0 = detail::matrix_from_json(require("Pi0"), "Pi0");
  sys.x0 = detail::matrix_from_json(require("x0"), "x0");

  auto stack = [&j, &dims](const char* key, int rows, int cols) {
    if (j.contains(key)) return detail::stack_from_json(j[key], key);
    return std::vector<Matrix<double>>(dims.p, Matrix<double>(rows, cols));
  };
  sys.dF = stack("dF", dims.n, dims.n);
  sys.dG = stack("dG", dims.n, dims.q);
  sys.dH = stack("dH", dims.m, dims.n);
  sys.dQ = stack("dQ", dims.q, dims.q);
  sys.dR = stack("dR", dims.m, dims.m);
  sys.dPi0 = stack("dPi0", dims.n, dims.n);
  sys.dx0 = stack("dx0", dims.n, 1);

  ModelSpec<double> spec;
  spec.name = j.contains("name")
                  ? detail::string_from_json(j["name"], "name")
                  : std::string("custom");
  spec.dims = dims;
  spec.theta_in_domain = [](const std::vector<double>&) { return true; };
  spec.build = [sys](const std::vector<double>&) { return sys; };
  return spec;
}

inline ModelSpec<double> load_model_file(const std::string& path) {
  return model_from_json(parse_json_file(path, "model"));
}

}  // namespace srlg
