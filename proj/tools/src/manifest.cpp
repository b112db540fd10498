#include "manifest.hpp"

#include "distopt/benchmarks.hpp"
#include "distopt/errors.hpp"

#include <filesystem>
#include <fstream>

namespace distopt::cli {

using nlohmann::json;

namespace {

Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(what + ": entries must be numbers");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
  Matrix M(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = to_vector(j[r], what);
    if (row.size() != cols) {
      throw ConfigError(what + ": row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(cols));
    }
    M.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return M;
}

ScalarField objective_from(const json& j, int n, const std::string& what) {
  const std::string type = j.value("type", "quadratic");
  const Vector c = j.contains("c") ? to_vector(j["c"], what + ".c") : Vector::Zero(n);
  if (c.size() != n) throw ConfigError(what + ".c: length differs from dim");
  if (type == "linear") return quadratic_objective(Matrix::Zero(n, n), c);
  if (type == "quadratic") {
    if (!j.contains("Q")) throw ConfigError(what + ": quadratic objective needs Q");
    return quadratic_objective(to_matrix(j["Q"], n, what + ".Q"), c);
  }
  throw ConfigError(what + ": unknown objective type '" + type + "' (use quadratic or linear)");
}

VectorField affine_from(const json& j, int n, const std::string& what) {
  if (!j.contains("C")) throw ConfigError(what + ": needs C");
  Matrix C = to_matrix(j["C"], n, what + ".C");
  Vector d = j.contains("d") ? to_vector(j["d"], what + ".d") : Vector::Zero(C.rows());
  if (d.size() != C.rows()) throw ConfigError(what + ".d: length differs from the row count of C");
  return VectorField::affine(std::move(C), std::move(d));
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

bool is_benchmark_name(const std::string& name) {
  return name == "consensus-quadratic" || name == "coupled-quadratic" || name == "linear-coupled" ||
         name == "logistic" || name == "sensor";
}

SeparableProblem build_benchmark(const BenchmarkSpec& spec) {
  if (spec.name == "consensus-quadratic") {
    const int n = spec.n.value_or(2);
    const int d = spec.dim.value_or(1);
    if (n < 1 || d < 1) throw ConfigError("consensus-quadratic: --n and --dim must be positive");
    std::vector<Vector> centers;
    for (int i = 0; i < n; ++i) centers.push_back(Vector::Constant(d, 2.0 * i + 1.0));
    return gen_consensus_quadratic(centers);
  }
  if (spec.name == "coupled-quadratic") {
    return build_quadratic_problem(
        random_quadratic_instance(spec.n.value_or(3), spec.dim.value_or(4), spec.mc.value_or(3), spec.seed));
  }
  if (spec.name == "linear-coupled") return gen_linear_coupled();
  if (spec.name == "logistic") {
    const LabeledDataset data = spec.dataset ? read_dataset_file(*spec.dataset)
                                             : gen_synthetic_dataset(spec.m.value_or(100), spec.nx.value_or(2), spec.seed);
    return gen_logistic_consensus(data, spec.nsub.value_or(10), spec.gamma.value_or(0.1),
                                  spec.uneven ? PartitionMode::last_block_smaller : PartitionMode::strict);
  }
  if (spec.name == "sensor") {
    return gen_sensor_problem(gen_sensor_scene(spec.n.value_or(5), spec.sigma.value_or(0.5), spec.seed));
  }
  throw ConfigError("unknown benchmark '" + spec.name + "'");
}

SeparableProblem load_problem(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("problem manifest must be a JSON object");
  try {
    if (doc.contains("benchmark")) {
      BenchmarkSpec spec;
      spec.name = doc["benchmark"].get<std::string>();
      spec.n = optional_field<int>(doc, "n");
      spec.dim = optional_field<int>(doc, "dim");
      spec.mc = optional_field<int>(doc, "mc");
      spec.m = optional_field<int>(doc, "m");
      spec.nx = optional_field<int>(doc, "nx");
      spec.nsub = optional_field<int>(doc, "nsub");
      spec.gamma = optional_field<double>(doc, "gamma");
      spec.sigma = optional_field<double>(doc, "sigma");
      spec.uneven = doc.value("uneven", false);
      spec.seed = doc.value("seed", std::uint64_t{1});
      if (auto ds = optional_field<std::string>(doc, "dataset")) {
        std::filesystem::path path(*ds);
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        spec.dataset = path.string();
      }
      return build_benchmark(spec);
    }

    if (!doc.contains("blocks") || !doc["blocks"].is_array() || doc["blocks"].empty()) {
      throw ConfigError("problem manifest needs a non-empty 'blocks' array or a 'benchmark' name");
    }
    const bool consensus = doc.value("consensus", false);
    std::vector<LocalBlock> blocks;
    BlockVectors start;
    bool any_start = false;
    for (std::size_t i = 0; i < doc["blocks"].size(); ++i) {
      const json& jb = doc["blocks"][i];
      const std::string what = "blocks[" + std::to_string(i) + "]";
      if (!jb.contains("dim")) throw ConfigError(what + ": needs dim");
      const int n = jb["dim"].get<int>();
      if (n < 1) throw ConfigError(what + ": dim must be positive");
      if (!jb.contains("objective")) throw ConfigError(what + ": needs an objective");
      LocalBlock blk;
      blk.n = n;
      blk.f = objective_from(jb["objective"], n, what + ".objective");
      blk.g = jb.contains("equalities") ? affine_from(jb["equalities"], n, what + ".equalities")
                                        : VectorField::none(n);
      blk.h = jb.contains("inequalities") ? affine_from(jb["inequalities"], n, what + ".inequalities")
                                          : VectorField::none(n);
      if (!consensus) {
        if (!jb.contains("A")) throw ConfigError(what + ": needs a coupling matrix A");
        blk.A = to_matrix(jb["A"], n, what + ".A");
      }
      if (jb.contains("lb")) blk.lb = to_vector(jb["lb"], what + ".lb");
      if (jb.contains("ub")) blk.ub = to_vector(jb["ub"], what + ".ub");
      if (jb.contains("start")) {
        start.push_back(to_vector(jb["start"], what + ".start"));
        any_start = true;
      } else {
        start.push_back(Vector::Zero(n));
      }
      blocks.push_back(std::move(blk));
    }
    if (!any_start) start.clear();
    if (consensus) return build_consensus_problem(std::move(blocks), std::move(start));
    if (!doc.contains("b")) throw ConfigError("problem manifest needs the coupling right-hand side 'b'");
    return build_problem(std::move(blocks), to_vector(doc["b"], "b"), std::move(start));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem manifest: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

SeparableProblem load_problem_file(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return load_problem(read_json_file(path), base.empty() ? "." : base);
}

}  // namespace distopt::cli
