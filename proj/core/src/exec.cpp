#include "distopt/exec.hpp"

#include "distopt/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace distopt {

ExecutionMode ExecutionMode::concurrent(int workers) {
  ExecutionMode m;
  m.kind = Kind::concurrent;
  m.worker_count = workers > 0 ? workers : default_worker_count();
  return m;
}

int default_worker_count() {
  if (const char* env = std::getenv(std::string(kWorkersEnvVar).c_str())) {
    int value = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size() && value > 0) return value;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::optional<ExecutionMode::Kind> parse_execution_kind(std::string_view text) {
  if (text == "sequential" || text == "seq") return ExecutionMode::Kind::sequential;
  if (text == "concurrent" || text == "conc" || text == "parallel") {
    return ExecutionMode::Kind::concurrent;
  }
  return std::nullopt;
}

namespace detail {

void run_indexed(std::size_t count, const std::function<void(std::size_t)>& body,
                 const ExecutionMode& mode) {
  std::vector<std::string> errors(count);
  std::vector<char> failed(count, 0);

  auto guarded = [&](std::size_t i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      failed[i] = 1;
      errors[i] = e.what();
    } catch (...) {
      failed[i] = 1;
      errors[i] = "unknown exception";
    }
  };

  const std::size_t workers =
      mode.is_concurrent() ? std::min<std::size_t>(static_cast<std::size_t>(std::max(1, mode.worker_count)), count)
                           : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) guarded(i);
      });
    }
  }

  std::vector<int> indices;
  std::vector<std::string> messages;
  for (std::size_t i = 0; i < count; ++i) {
    if (failed[i]) {
      indices.push_back(static_cast<int>(i));
      messages.push_back(errors[i]);
    }
  }
  if (!indices.empty()) {
    std::string what = "task failure in " + std::to_string(indices.size()) + " task(s):";
    for (std::size_t k = 0; k < indices.size(); ++k) {
      what += " [" + std::to_string(indices[k]) + "] " + messages[k];
    }
    throw TaskFailureError(what, std::move(indices), std::move(messages));
  }
}

}  // namespace detail

}  // namespace distopt
