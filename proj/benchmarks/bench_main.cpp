#include "distopt/aladin.hpp"
#include "distopt/benchmarks.hpp"
#include "distopt/first_order.hpp"
#include "distopt/kkt.hpp"
#include "distopt/random.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace distopt;

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = rng.normal();
  }
  return M;
}

void BM_SolveKkt(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = n / 4;
  Rng rng(3);
  const Matrix M = random_matrix(rng, n, n);
  KktSystem sys{M.transpose() * M + Matrix::Identity(n, n), random_matrix(rng, m, n), random_matrix(rng, n, 1),
                random_matrix(rng, m, 1)};
  for (auto _ : state) benchmark::DoNotOptimize(solve_kkt(sys));
}
BENCHMARK(BM_SolveKkt)->Arg(16)->Arg(64)->Arg(256);

void BM_AladinSensor(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const SeparableProblem p = gen_sensor_problem(gen_sensor_scene(N, 0.5, 1));
  AladinConfig cfg;
  cfg.mode = state.range(1) ? ExecutionMode::concurrent() : ExecutionMode::sequential();
  for (auto _ : state) benchmark::DoNotOptimize(run_aladin(p, cfg));
}
BENCHMARK(BM_AladinSensor)->Args({5, 0})->Args({5, 1})->Args({20, 0})->Args({20, 1})->Unit(benchmark::kMillisecond);

void BM_AladinLogistic(benchmark::State& state) {
  const SeparableProblem p = gen_logistic_consensus(gen_synthetic_dataset(100, 2, 1), 10, 0.1);
  AladinConfig cfg;
  cfg.max_iter = 10;
  for (auto _ : state) benchmark::DoNotOptimize(run_aladin(p, cfg));
}
BENCHMARK(BM_AladinLogistic)->Unit(benchmark::kMillisecond);

void BM_ConsensusAdmm(benchmark::State& state) {
  std::vector<Vector> centers;
  for (int i = 0; i < state.range(0); ++i) centers.push_back(Vector::Constant(3, i));
  const SeparableProblem p = gen_consensus_quadratic(centers);
  SolverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(consensus_admm(p, cfg));
}
BENCHMARK(BM_ConsensusAdmm)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
