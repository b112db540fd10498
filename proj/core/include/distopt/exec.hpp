#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <type_traits>
#include <vector>

namespace distopt {

struct ExecutionMode {
  enum class Kind { sequential, concurrent };
  Kind kind = Kind::sequential;
  int worker_count = 1;

  static ExecutionMode sequential() { return {}; }
  /// `workers` <= 0 selects default_worker_count().
  static ExecutionMode concurrent(int workers = 0);

  bool is_concurrent() const noexcept { return kind == Kind::concurrent; }
};

/// Environment variable overriding the default worker count.
inline constexpr std::string_view kWorkersEnvVar = "DISTOPT_WORKERS";

/// $DISTOPT_WORKERS when set to a positive integer, else the hardware thread count (>= 1).
int default_worker_count();

/// Parses "sequential" / "seq" / "concurrent" / "conc" / "parallel".
std::optional<ExecutionMode::Kind> parse_execution_kind(std::string_view text);

namespace detail {
/// Runs body(i) for i in [0, count). Exceptions are collected per index and
/// rethrown together as TaskFailureError once every task has finished.
void run_indexed(std::size_t count, const std::function<void(std::size_t)>& body,
                 const ExecutionMode& mode);
}  // namespace detail

template <class R>
struct MapResult {
  std::vector<R> results;
  double seconds = 0.0;
};

/// Evaluates fn(0..count-1) under `mode`; results land in index order no
/// matter which worker finishes first. At most min(worker_count, count)
/// threads are used.
template <class F>
auto map_indexed(std::size_t count, F&& fn, const ExecutionMode& mode)
    -> MapResult<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<R>> slots(count);
  const auto start = std::chrono::steady_clock::now();
  detail::run_indexed(count, [&](std::size_t i) { slots[i].emplace(fn(i)); }, mode);
  MapResult<R> out;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.results.reserve(count);
  for (auto& s : slots) out.results.push_back(std::move(*s));
  return out;
}

/// Ordered batch of independent tasks.
template <class Task>
auto map_blocks(const std::vector<Task>& tasks, const ExecutionMode& mode)
    -> MapResult<std::invoke_result_t<const Task&>> {
  return map_indexed(tasks.size(), [&tasks](std::size_t i) { return tasks[i](); }, mode);
}

}  // namespace distopt
