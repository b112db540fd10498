#pragma once

#include "distopt/problem.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace distopt::cli {

/// Parameters of a built-in benchmark. Unset fields take the benchmark's default.
struct BenchmarkSpec {
  std::string name;  ///< consensus-quadratic | coupled-quadratic | linear-coupled | logistic | sensor
  std::optional<int> n;
  std::optional<int> dim;
  std::optional<int> mc;
  std::optional<int> m;
  std::optional<int> nx;
  std::optional<int> nsub;
  std::optional<double> gamma;
  std::optional<double> sigma;
  std::optional<std::string> dataset;
  bool uneven = false;
  std::uint64_t seed = 1;
};

bool is_benchmark_name(const std::string& name);

SeparableProblem build_benchmark(const BenchmarkSpec& spec);

/// Problem manifest: either {"benchmark": name, ...parameters} or an explicit
/// {"b": [...], "consensus": bool, "blocks": [...]} description. Relative
/// paths (dataset files) resolve against base_dir.
SeparableProblem load_problem(const nlohmann::json& doc, const std::string& base_dir);
SeparableProblem load_problem_file(const std::string& path);

/// Reads a JSON file, throwing distopt::ConfigError on I/O or syntax errors.
nlohmann::json read_json_file(const std::string& path);

}  // namespace distopt::cli
