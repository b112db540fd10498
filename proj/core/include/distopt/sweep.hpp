#pragma once

#include "distopt/aladin.hpp"
#include "distopt/benchmarks.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace distopt {

struct TimingRow {
  int N = 0;
  double sigma = 0.0;
  double t_concurrent = 0.0;
  double t_sequential = 0.0;
  int iterations = 0;
  std::string status;  ///< solver status, or "failed" when the cell threw
};

struct TimingTable {
  std::vector<TimingRow> rows;
};

inline constexpr const char* kTimingCsvHeader = "N,sigma,t_concurrent,t_sequential,iters,status";

struct SweepConfig {
  AladinConfig aladin;  ///< mode is overridden per run
  int workers = 0;      ///< concurrent worker count; 0 selects the default
  std::uint64_t seed = 1;
  int repeats = 1;  ///< runs per cell and mode; the fastest is kept
  SensorOptions sensor;
};

/// The 14-point sensor-count vector and its paired noise levels.
std::vector<int> default_sweep_sizes();
std::vector<double> default_sweep_sigmas();

/// One sensor problem per (N_k, sigma_k), solved once per execution mode.
/// Throws ConfigError when the lists differ in length; solver failures are
/// recorded in the row's status and the sweep continues.
TimingTable runtime_sweep(const std::vector<int>& Ns, const std::vector<double>& sigmas,
                          const SweepConfig& cfg = {});

void write_timing_csv(std::ostream& out, const TimingTable& table);

}  // namespace distopt
