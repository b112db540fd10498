#include "distopt/trace.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace distopt {

void ConvergenceTrace::append(const TraceRecord& record) {
  const int expected_min = records_.empty() ? 0 : records_.back().iter + 1;
  if (records_.empty() ? record.iter != 0 : record.iter < expected_min) {
    throw ConfigError("ConvergenceTrace: iteration indices must start at 0 and strictly increase");
  }
  if (!(record.seconds >= 0.0)) throw ConfigError("ConvergenceTrace: negative wall-clock time");
  records_.push_back(record);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace,
                     const TraceCsvOptions& options, bool header, std::string_view tag) {
  if (header) {
    if (!tag.empty()) out << "solver,";
    out << kTraceCsvHeader << '\n';
  }
  for (const auto& r : trace.records()) {
    if (!tag.empty()) out << tag << ',';
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.primal_res)
        << ',' << format_double(r.dual_res) << ',' << format_double(r.step_norm) << ','
        << format_double(options.mask_seconds ? 0.0 : r.seconds) << '\n';
  }
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max-iter";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::oscillating: return "oscillating";
  }
  return "unknown";
}

}  // namespace distopt
