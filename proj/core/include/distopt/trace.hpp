#pragma once

#include "distopt/errors.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace distopt {

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double primal_res = 0.0;  ///< L2 norm of the coupling residual
  double dual_res = 0.0;    ///< L2 norm of the stationarity (dual) residual
  double step_norm = 0.0;   ///< L2 norm of the primal step
  double seconds = 0.0;     ///< wall-clock seconds since the solve started
};

/// Per-iteration records with strictly increasing iteration indices starting at 0.
class ConvergenceTrace {
 public:
  /// Throws ConfigError when the index ordering or the time sign is violated.
  void append(const TraceRecord& record);

  const std::vector<TraceRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }
  const TraceRecord& back() const { return records_.back(); }

  /// Index of the last record, i.e. the number of iterations performed.
  int iterations() const noexcept { return records_.empty() ? 0 : records_.back().iter; }

 private:
  std::vector<TraceRecord> records_;
};

inline constexpr std::string_view kTraceCsvHeader =
    "iter,objective,primal_res,dual_res,step_norm,seconds";

struct TraceCsvOptions {
  /// Write 0 in the seconds column so repeated runs produce identical bytes.
  bool mask_seconds = false;
};

/// Shortest round-trip decimal form of a double ("inf", "-inf", "nan" for specials).
std::string format_double(double value);

/// CSV with header kTraceCsvHeader; a non-empty `tag` prepends a `solver` column.
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace,
                     const TraceCsvOptions& options = {}, bool header = true,
                     std::string_view tag = {});

enum class SolveStatus { converged, max_iter, diverged, oscillating };

std::string_view to_string(SolveStatus status);

/// Raised when a solver aborts mid-run; carries the iteration and the trace so far.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, int iteration, ConvergenceTrace partial)
      : Error(what), iteration_(iteration), partial_(std::move(partial)) {}
  int iteration() const noexcept { return iteration_; }
  const ConvergenceTrace& partial_trace() const noexcept { return partial_; }

 private:
  int iteration_;
  ConvergenceTrace partial_;
};

/// A block's local subproblem failed; the outer loop was aborted.
class BlockFailureError : public SolverFailure {
 public:
  BlockFailureError(const std::string& what, int block, int iteration, ConvergenceTrace partial)
      : SolverFailure(what, iteration, std::move(partial)), block_(block) {}
  int block() const noexcept { return block_; }

 private:
  int block_;
};

}  // namespace distopt
