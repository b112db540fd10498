#include "distopt/aladin.hpp"
#include "distopt/benchmarks.hpp"
#include "distopt/errors.hpp"
#include "distopt/exec.hpp"
#include "distopt/random.hpp"
#include "distopt/sweep.hpp"

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

using namespace distopt;

TEST_SUITE("exec-harness") {
  TEST_CASE("execution kind parsing") {
    CHECK(parse_execution_kind("sequential") == ExecutionMode::Kind::sequential);
    CHECK(parse_execution_kind("seq") == ExecutionMode::Kind::sequential);
    CHECK(parse_execution_kind("concurrent") == ExecutionMode::Kind::concurrent);
    CHECK(parse_execution_kind("parallel") == ExecutionMode::Kind::concurrent);
    CHECK_FALSE(parse_execution_kind("gpu"));
    CHECK(ExecutionMode::concurrent(3).worker_count == 3);
    CHECK(ExecutionMode::concurrent().worker_count >= 1);
    CHECK(default_worker_count() >= 1);
  }

  TEST_CASE("results land in task order for random durations") {
    Rng rng(1);
    std::vector<int> delays;
    for (int i = 0; i < 24; ++i) delays.push_back(static_cast<int>(rng.uniform() * 4));
    for (const ExecutionMode& mode : {ExecutionMode::sequential(), ExecutionMode::concurrent(6)}) {
      const auto out = map_indexed(
          delays.size(),
          [&](std::size_t i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delays[i]));
            return static_cast<int>(i) * 7;
          },
          mode);
      REQUIRE(out.results.size() == delays.size());
      for (std::size_t i = 0; i < delays.size(); ++i) CHECK(out.results[i] == static_cast<int>(i) * 7);
      CHECK(out.seconds >= 0.0);
    }
  }

  TEST_CASE("a single task gives the same result in both modes") {
    std::vector<std::function<double()>> tasks = {[] { return 3.25; }};
    CHECK(map_blocks(tasks, ExecutionMode::sequential()).results == map_blocks(tasks, ExecutionMode::concurrent(4)).results);
    CHECK(map_indexed(0, [](std::size_t) { return 1; }, ExecutionMode::concurrent(4)).results.empty());
  }

  TEST_CASE("failures are aggregated with every failing index") {
    std::atomic<int> ran{0};
    for (const ExecutionMode& mode : {ExecutionMode::sequential(), ExecutionMode::concurrent(3)}) {
      ran = 0;
      try {
        map_indexed(
            8,
            [&](std::size_t i) {
              ++ran;
              if (i == 2 || i == 5) throw std::runtime_error("task " + std::to_string(i));
              return i;
            },
            mode);
        FAIL("expected TaskFailureError");
      } catch (const TaskFailureError& e) {
        CHECK(e.failed_indices() == std::vector<int>{2, 5});
        REQUIRE(e.messages().size() == 2);
        CHECK(e.messages()[0] == "task 2");
      }
      CHECK(ran == 8);
    }
  }

  TEST_CASE("concurrent sleeping tasks overlap") {
    auto sleeper = [](std::size_t) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      return 0;
    };
    const double seq = map_indexed(10, sleeper, ExecutionMode::sequential()).seconds;
    const double conc = map_indexed(10, sleeper, ExecutionMode::concurrent(10)).seconds;
    CHECK(seq >= 0.5);
    CHECK(conc < 0.5 * seq);
  }

  TEST_CASE("local steps are bitwise equal across modes") {
    const SeparableProblem p = gen_sensor_problem(gen_sensor_scene(10, 0.3, 2));
    const AladinConfig cfg;
    const Vector lambda = Vector::Constant(p.coupling_rows(), 0.1);
    auto step = [&](std::size_t i) { return local_step(p.block(i), lambda, p.initial_guess()[i], Matrix(), cfg).x; };
    const auto a = map_indexed(p.num_blocks(), step, ExecutionMode::sequential());
    const auto b = map_indexed(p.num_blocks(), step, ExecutionMode::concurrent(4));
    for (std::size_t i = 0; i < p.num_blocks(); ++i) CHECK(a.results[i] == b.results[i]);
  }

  TEST_CASE("worker count honours the environment variable") {
    const char* old = std::getenv("DISTOPT_WORKERS");
    const std::string saved = old ? old : "";
    ::setenv("DISTOPT_WORKERS", "3", 1);
    CHECK(default_worker_count() == 3);
    ::setenv("DISTOPT_WORKERS", "zero", 1);
    CHECK(default_worker_count() >= 1);
    if (old) {
      ::setenv("DISTOPT_WORKERS", saved.c_str(), 1);
    } else {
      ::unsetenv("DISTOPT_WORKERS");
    }
  }

  TEST_CASE("runtime sweep") {
    const TimingTable one = runtime_sweep({5}, {0.5});
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0].N == 5);
    CHECK(one.rows[0].sigma == 0.5);
    CHECK(one.rows[0].status == "converged");
    CHECK(one.rows[0].iterations > 0);
    CHECK(one.rows[0].t_concurrent >= 0.0);
    CHECK(one.rows[0].t_sequential >= 0.0);

    CHECK_THROWS_AS(runtime_sweep({5, 10}, {0.5}), ConfigError);

    const std::vector<int> sizes = default_sweep_sizes();
    CHECK(sizes == std::vector<int>{5, 10, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80, 90, 100});
    CHECK(default_sweep_sigmas().size() == sizes.size());

    std::ostringstream csv;
    write_timing_csv(csv, one);
    const std::string text = csv.str();
    CHECK(text.rfind(std::string(kTimingCsvHeader) + "\n", 0) == 0);
    CHECK(text.find("\n5,0.5,") != std::string::npos);
  }

  TEST_CASE("runtime sweep records failures and continues") {
    SweepConfig cfg;
    cfg.aladin.inner_max_iter = 1;
    const TimingTable t = runtime_sweep({5, 6}, {0.5, 0.5}, cfg);
    REQUIRE(t.rows.size() == 2);
    for (const TimingRow& row : t.rows) CHECK(row.status == "failed");
  }
}
