#include "cli.hpp"

#include "manifest.hpp"

#include "distopt/aladin.hpp"
#include "distopt/benchmarks.hpp"
#include "distopt/errors.hpp"
#include "distopt/first_order.hpp"
#include "distopt/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace distopt::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kSolvers = {"dual-ascent", "dual-decomp", "mom",
                                           "admm",        "consensus-admm", "aladin"};

bool is_solver_name(const std::string& s) {
  return std::find(kSolvers.begin(), kSolvers.end(), s) != kSolvers.end();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

struct RunOptions {
  BenchmarkSpec bench;
  std::string problem_file;
  std::string manifest_file;
  std::optional<json> manifest_problem;
  std::string manifest_dir = ".";

  std::string solver;
  std::vector<std::string> solvers;

  std::optional<double> rho, nu, alpha, tol_primal, tol_dual, eps_act;
  std::optional<int> max_iter, workers;
  std::optional<std::string> mode, hessian_mode;
  std::optional<std::uint64_t> seed;
  bool aladin_defaults = false;
  bool mask_time = false;
  std::optional<std::string> trace_path, solution_path;
};

void add_problem_options(CLI::App* app, RunOptions& o) {
  app->add_option("--benchmark", o.bench.name,
                  "Built-in problem: consensus-quadratic, coupled-quadratic, linear-coupled, logistic, sensor");
  app->add_option("--problem", o.problem_file, "JSON problem manifest")->check(CLI::ExistingFile);
  app->add_option("--manifest", o.manifest_file, "JSON run manifest (problem, solver, config, output)")
      ->check(CLI::ExistingFile);
  app->add_option("--n", o.bench.n, "Blocks (quadratics) or sensors (sensor)");
  app->add_option("--dim", o.bench.dim, "Per-block dimension bound (quadratics)");
  app->add_option("--mc", o.bench.mc, "Coupling rows (coupled-quadratic)");
  app->add_option("--m", o.bench.m, "Data points (logistic)");
  app->add_option("--nx", o.bench.nx, "Features per data point (logistic)");
  app->add_option("--nsub", o.bench.nsub, "Subsystems (logistic)");
  app->add_option("--gamma", o.bench.gamma, "Regularization weight (logistic)");
  app->add_option("--dataset", o.bench.dataset, "Delimited dataset file (logistic)")->check(CLI::ExistingFile);
  app->add_flag("--uneven", o.bench.uneven, "Allow a smaller last block when nsub does not divide M");
  app->add_option("--sigma", o.bench.sigma, "Measurement noise (sensor)");
  app->add_option("--seed", o.seed, "Seed for generated problem data");
}

void add_config_options(CLI::App* app, RunOptions& o) {
  app->add_option("--rho", o.rho, "Penalty weight");
  app->add_option("--nu", o.nu, "ALADIN proximal weight");
  app->add_option("--alpha", o.alpha, "Dual step size");
  app->add_option("--max-iter", o.max_iter, "Iteration budget");
  app->add_option("--tol-primal", o.tol_primal, "Primal residual tolerance");
  app->add_option("--tol-dual", o.tol_dual, "Dual residual tolerance");
  app->add_option("--eps-act", o.eps_act, "Active-set threshold (ALADIN)");
  app->add_option("--hessian-mode", o.hessian_mode, "ALADIN Hessian: exact-fd, analytic, regularized");
  app->add_option("--mode", o.mode, "Execution mode: sequential or concurrent");
  app->add_option("--workers", o.workers, "Worker threads for concurrent mode");
  app->add_flag("--aladin-defaults", o.aladin_defaults, "ALADIN with rho=1e3, nu=1e4, max_iter=10");
  app->add_flag("--mask-time", o.mask_time, "Write 0 in the seconds column of traces");
  app->add_option("--trace", o.trace_path, "Trace CSV output path (default trace.csv)");
  app->add_option("--solution", o.solution_path, "Per-block solution CSV output path");
}

template <class T>
void fill(std::optional<T>& target, const json& j, const char* key) {
  if (!target && j.contains(key)) target = j[key].get<T>();
}

/// Values from --manifest fill whatever the command line left unset.
void apply_run_manifest(RunOptions& o) {
  if (o.manifest_file.empty()) return;
  const json doc = read_json_file(o.manifest_file);
  if (!doc.is_object()) throw ConfigError("run manifest must be a JSON object");
  const auto dir = std::filesystem::path(o.manifest_file).parent_path().string();
  o.manifest_dir = dir.empty() ? "." : dir;
  try {
    if (doc.contains("problem")) {
      const json& pj = doc["problem"];
      if (pj.is_string()) {
        std::filesystem::path path(pj.get<std::string>());
        if (path.is_relative()) path = std::filesystem::path(o.manifest_dir) / path;
        if (o.problem_file.empty() && o.bench.name.empty()) o.problem_file = path.string();
      } else {
        o.manifest_problem = pj;
      }
    }
    if (o.solver.empty() && doc.contains("solver")) o.solver = doc["solver"].get<std::string>();
    if (o.solvers.empty() && doc.contains("solvers")) {
      o.solvers = doc["solvers"].get<std::vector<std::string>>();
    }
    if (doc.contains("config")) {
      const json& c = doc["config"];
      fill(o.rho, c, "rho");
      fill(o.nu, c, "nu");
      fill(o.alpha, c, "alpha");
      fill(o.max_iter, c, "max_iter");
      fill(o.tol_primal, c, "tol_primal");
      fill(o.tol_dual, c, "tol_dual");
      fill(o.eps_act, c, "eps_act");
      fill(o.hessian_mode, c, "hessian_mode");
      fill(o.mode, c, "mode");
      fill(o.workers, c, "workers");
      fill(o.seed, c, "seed");
      if (c.value("aladin_defaults", false)) o.aladin_defaults = true;
    }
    if (doc.contains("output")) {
      const json& out = doc["output"];
      auto resolve = [&](std::optional<std::string>& target, const char* key) {
        if (target || !out.contains(key)) return;
        std::filesystem::path path(out[key].get<std::string>());
        if (path.is_relative()) path = std::filesystem::path(o.manifest_dir) / path;
        target = path.string();
      };
      resolve(o.trace_path, "trace");
      resolve(o.solution_path, "solution");
      if (out.value("mask_time", false)) o.mask_time = true;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run manifest: ") + e.what());
  }
}

SeparableProblem resolve_problem(RunOptions& o) {
  if (o.seed) o.bench.seed = *o.seed;
  if (!o.bench.name.empty()) {
    if (!is_benchmark_name(o.bench.name)) {
      throw ConfigError("unknown benchmark '" + o.bench.name +
                        "' (consensus-quadratic, coupled-quadratic, linear-coupled, logistic, sensor)");
    }
    return build_benchmark(o.bench);
  }
  if (!o.problem_file.empty()) return load_problem_file(o.problem_file);
  if (o.manifest_problem) return load_problem(*o.manifest_problem, o.manifest_dir);
  throw ConfigError("no problem given: use --benchmark, --problem or --manifest");
}

ExecutionMode execution_mode(const RunOptions& o) {
  const std::string text = o.mode.value_or("concurrent");
  const auto kind = parse_execution_kind(text);
  if (!kind) throw ConfigError("unknown execution mode '" + text + "' (sequential or concurrent)");
  if (o.workers && *o.workers < 1) throw ConfigError("--workers must be at least 1");
  if (*kind == ExecutionMode::Kind::sequential) return ExecutionMode::sequential();
  return ExecutionMode::concurrent(o.workers.value_or(0));
}

SolverConfig first_order_config(const RunOptions& o) {
  SolverConfig c;
  c.mode = execution_mode(o);
  if (o.rho) c.rho = *o.rho;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.max_iter) c.max_iter = *o.max_iter;
  if (o.tol_primal) c.tol_primal = *o.tol_primal;
  if (o.tol_dual) c.tol_dual = *o.tol_dual;
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

AladinConfig aladin_config(const RunOptions& o) {
  AladinConfig c;
  c.mode = execution_mode(o);
  if (o.aladin_defaults) {
    c.rho = 1e3;
    c.nu = 1e4;
    c.max_iter = 10;
  }
  if (o.rho) c.rho = *o.rho;
  if (o.nu) c.nu = *o.nu;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.max_iter) c.max_iter = *o.max_iter;
  if (o.tol_primal) c.tol_primal = *o.tol_primal;
  if (o.tol_dual) c.tol_dual = *o.tol_dual;
  if (o.eps_act) c.eps_act = *o.eps_act;
  if (o.hessian_mode) {
    const auto m = parse_hessian_mode(*o.hessian_mode);
    if (!m) throw ConfigError("unknown hessian mode '" + *o.hessian_mode + "' (exact-fd, analytic, regularized)");
    c.hessian_mode = *m;
  }
  return c;
}

struct Outcome {
  std::string solver;
  std::string status;
  bool converged = false;
  ConvergenceTrace trace;
  BlockVectors x;
  std::string message;
};

/// Config problems propagate as ConfigError; solver aborts become a "failed" outcome.
Outcome run_solver(const std::string& name, const SeparableProblem& p, const RunOptions& o) {
  Outcome out;
  out.solver = name;
  auto take = [&](SolveResult r) {
    out.status = std::string(to_string(r.status));
    out.converged = r.status == SolveStatus::converged;
    out.trace = std::move(r.trace);
    out.x = std::move(r.state.x);
  };
  try {
    if (name == "aladin") {
      const AladinConfig cfg = aladin_config(o);
      take(run_aladin(p, cfg));
      return out;
    }
    const SolverConfig cfg = first_order_config(o);
    if (name == "dual-ascent") {
      take(dual_ascent(p, cfg));
    } else if (name == "dual-decomp") {
      take(dual_decomposition(p, cfg));
    } else if (name == "mom") {
      take(method_of_multipliers(p, cfg));
    } else if (name == "consensus-admm") {
      take(consensus_admm(p, cfg));
    } else if (name == "admm") {
      if (p.num_blocks() != 2 || p.has_local_constraints()) {
        throw ConfigError("admm needs exactly two blocks without local constraints; try consensus-admm");
      }
      take(admm_two_block(p.block(0).f, p.block(1).f, p.block(0).A, p.block(1).A, p.b(), cfg));
    } else {
      throw ConfigError("unknown solver '" + name + "' (" + join(kSolvers) + ")");
    }
  } catch (const SolverFailure& e) {
    out.status = "failed";
    out.trace = e.partial_trace();
    out.message = e.what();
  } catch (const EvaluationError& e) {
    out.status = "failed";
    out.message = e.what();
  } catch (const TaskFailureError& e) {
    out.status = "failed";
    out.message = e.what();
  }
  return out;
}

double final_primal(const Outcome& r) {
  return r.trace.empty() ? std::numeric_limits<double>::quiet_NaN() : r.trace.back().primal_res;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  return f;
}

void write_solution(std::ostream& f, const Outcome& r, bool tagged) {
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    for (Eigen::Index k = 0; k < r.x[i].size(); ++k) {
      if (tagged) f << r.solver << ',';
      f << i << ',' << k << ',' << format_double(r.x[i][k]) << '\n';
    }
  }
}

int cmd_solve(RunOptions& o, std::ostream& out, std::ostream& err) {
  apply_run_manifest(o);
  if (o.solver.empty()) throw ConfigError("no solver given (" + join(kSolvers) + ")");
  if (!is_solver_name(o.solver)) throw ConfigError("unknown solver '" + o.solver + "' (" + join(kSolvers) + ")");
  const SeparableProblem p = resolve_problem(o);
  const Outcome r = run_solver(o.solver, p, o);

  {
    std::ofstream f = open_output(o.trace_path.value_or("trace.csv"));
    write_trace_csv(f, r.trace, TraceCsvOptions{o.mask_time});
  }
  if (o.solution_path) {
    std::ofstream f = open_output(*o.solution_path);
    f << "block,index,value\n";
    write_solution(f, r, false);
  }
  if (!r.message.empty()) err << "error: " << r.message << '\n';
  out << "status=" << r.status << " iters=" << r.trace.iterations() << " primal_res=" << sci(final_primal(r))
      << '\n';
  return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_compare(RunOptions& o, std::ostream& out, std::ostream& err) {
  apply_run_manifest(o);
  if (o.solvers.size() < 2) throw ConfigError("compare needs at least two solvers (--solvers a,b)");
  for (const auto& s : o.solvers) {
    if (!is_solver_name(s)) throw ConfigError("unknown solver '" + s + "' (" + join(kSolvers) + ")");
  }
  const SeparableProblem p = resolve_problem(o);

  std::vector<Outcome> results;
  for (const auto& s : o.solvers) {
    try {
      results.push_back(run_solver(s, p, o));
    } catch (const Error& e) {
      Outcome r;
      r.solver = s;
      r.status = "failed";
      r.message = e.what();
      results.push_back(std::move(r));
    }
  }

  {
    std::ofstream f = open_output(o.trace_path.value_or("compare.csv"));
    f << "solver," << kTraceCsvHeader << '\n';
    for (const auto& r : results) write_trace_csv(f, r.trace, TraceCsvOptions{o.mask_time}, false, r.solver);
  }
  if (o.solution_path) {
    std::ofstream f = open_output(*o.solution_path);
    f << "solver,block,index,value\n";
    for (const auto& r : results) write_solution(f, r, true);
  }

  out << std::left << std::setw(16) << "solver" << std::setw(13) << "status" << std::setw(7) << "iters"
      << std::setw(15) << "primal_res" << "dual_res" << '\n';
  for (const auto& r : results) {
    const double dual = r.trace.empty() ? std::numeric_limits<double>::quiet_NaN() : r.trace.back().dual_res;
    out << std::left << std::setw(16) << r.solver << std::setw(13) << r.status << std::setw(7)
        << r.trace.iterations() << std::setw(15) << sci(final_primal(r)) << sci(dual) << '\n';
    if (!r.message.empty()) err << r.solver << ": " << r.message << '\n';
  }
  return kExitOk;
}

struct BenchOptions {
  bool default_sweep = false;
  std::vector<int> sizes;
  std::vector<double> sigmas;
  std::string out = "timing.csv";
  std::string plot = "plot_runtime.py";
  int workers = 0;
  int repeats = 1;
  std::optional<int> max_iter;
  std::uint64_t seed = 1;
};

std::string plot_script(const std::string& csv_path) {
  std::string s = R"(#!/usr/bin/env python3
"""Runtime of the sensor localization sweep against the number of sensors."""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else ")";
  s += csv_path;
  s += R"("
out = sys.argv[2] if len(sys.argv) > 2 else "runtime.png"

with open(path, newline="") as f:
    rows = list(csv.DictReader(f))
n = [int(r["N"]) for r in rows]
t_conc = [float(r["t_concurrent"]) for r in rows]
t_seq = [float(r["t_sequential"]) for r in rows]

plt.figure(figsize=(7, 4.5))
plt.plot(n, t_conc, "o-", label="decentral optimization")
plt.plot(n, t_seq, "s--", label="central optimization")
plt.xlabel("number of sensors N")
plt.ylabel("runtime [s]")
plt.title("Sensor network localization runtime")
plt.grid(True, alpha=0.3)
plt.legend()
plt.tight_layout()
plt.savefig(out, dpi=150)
print("wrote", out)
)";
  return s;
}

int cmd_bench_sensors(const BenchOptions& b, std::ostream& out) {
  std::vector<int> sizes = b.sizes;
  std::vector<double> sigmas = b.sigmas;
  if (b.default_sweep) {
    if (!sizes.empty() || !sigmas.empty()) throw ConfigError("--default-sweep cannot be combined with --n/--sigma");
    sizes = default_sweep_sizes();
    sigmas = default_sweep_sigmas();
  }
  if (sizes.empty()) throw ConfigError("give --default-sweep or --n and --sigma lists");
  SweepConfig cfg;
  cfg.workers = b.workers;
  cfg.repeats = b.repeats;
  cfg.seed = b.seed;
  if (b.max_iter) cfg.aladin.max_iter = *b.max_iter;
  const TimingTable table = runtime_sweep(sizes, sigmas, cfg);

  {
    std::ofstream f = open_output(b.out);
    write_timing_csv(f, table);
  }
  {
    std::ofstream f = open_output(b.plot);
    f << plot_script(b.out);
  }
  out << std::left << std::setw(6) << "N" << std::setw(8) << "sigma" << std::setw(15) << "t_concurrent"
      << std::setw(15) << "t_sequential" << std::setw(7) << "iters" << "status" << '\n';
  for (const auto& r : table.rows) {
    out << std::left << std::setw(6) << r.N << std::setw(8) << r.sigma << std::setw(15) << sci(r.t_concurrent)
        << std::setw(15) << sci(r.t_sequential) << std::setw(7) << r.iterations << r.status << '\n';
  }
  out << "table: " << b.out << "\nplot script: " << b.plot << '\n';
  return kExitOk;
}

json config_defaults() {
  const SolverConfig fo;
  const AladinConfig al;
  json j;
  j["first_order"] = {{"rho", fo.rho},
                      {"alpha", fo.alpha},
                      {"max_iter", fo.max_iter},
                      {"tol_primal", fo.tol_primal},
                      {"tol_dual", fo.tol_dual},
                      {"inner_tol", fo.inner_tol},
                      {"divergence_radius", fo.divergence_radius},
                      {"oscillation_window", fo.oscillation_window}};
  j["aladin"] = {{"rho", al.rho},
                 {"nu", al.nu},
                 {"alpha", "rho"},
                 {"sigma", "identity"},
                 {"max_iter", al.max_iter},
                 {"tol_primal", al.tol_primal},
                 {"tol_dual", al.tol_dual},
                 {"eps_act", al.eps_act},
                 {"inner_tol", al.inner_tol},
                 {"hessian_mode", std::string(to_string(al.hessian_mode))}};
  j["aladin_defaults"] = {{"rho", 1e3}, {"nu", 1e4}, {"max_iter", 10}};
  const char* env = std::getenv(std::string(kWorkersEnvVar).c_str());
  j["execution"] = {{"mode", "concurrent"},
                    {"workers", default_worker_count()},
                    {"env", std::string(kWorkersEnvVar)},
                    {"env_value", env ? json(env) : json(nullptr)}};
  j["solvers"] = kSolvers;
  return j;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed optimization toolkit", "distopt"};
  app.require_subcommand(1);

  RunOptions solve_opts;
  CLI::App* solve = app.add_subcommand("solve", "Solve one problem with one solver");
  add_problem_options(solve, solve_opts);
  add_config_options(solve, solve_opts);
  solve->add_option("--solver", solve_opts.solver, "Solver: " + join(kSolvers));

  RunOptions cmp_opts;
  CLI::App* compare = app.add_subcommand("compare", "Run several solvers on one problem");
  add_problem_options(compare, cmp_opts);
  add_config_options(compare, cmp_opts);
  compare->add_option("--solvers", cmp_opts.solvers, "Comma-separated solver list")->delimiter(',');

  BenchOptions bench_opts;
  CLI::App* bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  CLI::App* sensors = bench->add_subcommand("sensors", "Sensor localization runtime sweep");
  sensors->add_flag("--default-sweep", bench_opts.default_sweep, "Use the 14-point sweep");
  sensors->add_option("--n", bench_opts.sizes, "Comma-separated sensor counts")->delimiter(',');
  sensors->add_option("--sigma", bench_opts.sigmas, "Comma-separated noise levels")->delimiter(',');
  sensors->add_option("--out", bench_opts.out, "Timing table CSV path");
  sensors->add_option("--plot", bench_opts.plot, "Plot script path");
  sensors->add_option("--workers", bench_opts.workers, "Worker threads for the concurrent runs");
  sensors->add_option("--repeats", bench_opts.repeats, "Runs per cell and mode (fastest kept)");
  sensors->add_option("--max-iter", bench_opts.max_iter, "ALADIN iteration budget");
  sensors->add_option("--seed", bench_opts.seed, "Base seed; cell k uses seed + k");

  CLI::App* config = app.add_subcommand("config", "Configuration");
  config->require_subcommand(1);
  CLI::App* show = config->add_subcommand("show", "Print every default as JSON");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("distopt");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_opts, out, err);
    if (compare->parsed()) return cmd_compare(cmp_opts, out, err);
    if (sensors->parsed()) return cmd_bench_sensors(bench_opts, out);
    if (show->parsed()) {
      out << config_defaults().dump(2) << '\n';
      return kExitOk;
    }
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace distopt::cli
