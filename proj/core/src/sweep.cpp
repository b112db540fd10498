#include "distopt/sweep.hpp"

#include "distopt/errors.hpp"
#include "distopt/trace.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>

namespace distopt {

std::vector<int> default_sweep_sizes() { return {5, 10, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80, 90, 100}; }

std::vector<double> default_sweep_sigmas() {
  return {0.5, 1.0, 1.5, 2.0, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5};
}

namespace {

struct CellRun {
  double seconds = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::string status = "failed";
};

CellRun timed_run(const SeparableProblem& p, AladinConfig cfg, const ExecutionMode& mode, int repeats) {
  cfg.mode = mode;
  CellRun best;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const SolveResult res = run_aladin(p, cfg);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (s < best.seconds) best.seconds = s;
      best.iterations = res.iterations();
      best.status = std::string(to_string(res.status));
    } catch (const Error&) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (s < best.seconds) best.seconds = s;
      best.status = "failed";
    }
  }
  return best;
}

}  // namespace

TimingTable runtime_sweep(const std::vector<int>& Ns, const std::vector<double>& sigmas, const SweepConfig& cfg) {
  if (Ns.size() != sigmas.size()) {
    throw ConfigError("runtime_sweep: " + std::to_string(Ns.size()) + " sizes but " +
                      std::to_string(sigmas.size()) + " noise levels");
  }
  if (cfg.repeats < 1) throw ConfigError("runtime_sweep: repeats must be at least 1");
  TimingTable table;
  for (std::size_t k = 0; k < Ns.size(); ++k) {
    const SensorScene scene = gen_sensor_scene(Ns[k], sigmas[k], cfg.seed + k);
    const SeparableProblem p = gen_sensor_problem(scene, cfg.sensor);
    const CellRun conc = timed_run(p, cfg.aladin, ExecutionMode::concurrent(cfg.workers), cfg.repeats);
    const CellRun seq = timed_run(p, cfg.aladin, ExecutionMode::sequential(), cfg.repeats);
    TimingRow row;
    row.N = Ns[k];
    row.sigma = sigmas[k];
    row.t_concurrent = conc.seconds;
    row.t_sequential = seq.seconds;
    row.iterations = seq.iterations;
    row.status = conc.status == seq.status ? seq.status : conc.status + "/" + seq.status;
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_timing_csv(std::ostream& out, const TimingTable& table) {
  out << kTimingCsvHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.N << ',' << format_double(r.sigma) << ',' << format_double(r.t_concurrent) << ','
        << format_double(r.t_sequential) << ',' << r.iterations << ',' << r.status << '\n';
  }
}

}  // namespace distopt
