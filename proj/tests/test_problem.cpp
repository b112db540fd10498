#include "distopt/benchmarks.hpp"
#include "distopt/errors.hpp"
#include "distopt/problem.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace distopt;

namespace {

LocalBlock square_block(Matrix A) {
  ScalarField f;
  f.dim = static_cast<int>(A.cols());
  f.eval = [](const Vector& x) { return x.squaredNorm(); };
  return LocalBlock::unconstrained(std::move(f), std::move(A));
}

LocalBlock zero_block(Matrix A) {
  ScalarField f;
  f.dim = static_cast<int>(A.cols());
  f.eval = [](const Vector&) { return 0.0; };
  return LocalBlock::unconstrained(std::move(f), std::move(A));
}

}  // namespace

TEST_SUITE("problem-model") {
  TEST_CASE("build_problem accepts a minimal instance") {
    const SeparableProblem p =
        build_problem({square_block(Matrix::Ones(1, 1)), square_block(Matrix::Ones(1, 1))}, Vector::Zero(1));
    CHECK(p.coupling_rows() == 1);
    CHECK(p.total_dim() == 2);
    CHECK(p.num_blocks() == 2);
    CHECK(p.initial_guess().size() == 2);
  }

  TEST_CASE("build_problem rejects shape violations naming the block") {
    try {
      build_problem({square_block(Matrix::Ones(1, 1)), square_block(Matrix::Ones(2, 1))}, Vector::Zero(3));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(e.block() == 0);
    }
    try {
      build_problem({square_block(Matrix::Ones(3, 1)), square_block(Matrix::Ones(2, 1))}, Vector::Zero(3));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(e.block() == 1);
    }
    CHECK_THROWS_AS(build_problem({}, Vector::Zero(0)), DimensionError);

    LocalBlock wrong_cols = square_block(Matrix::Ones(1, 2));
    wrong_cols.n = 3;
    CHECK_THROWS_AS(build_problem({wrong_cols}, Vector::Zero(1)), DimensionError);

    LocalBlock bad_bounds = square_block(Matrix::Ones(1, 1));
    bad_bounds.lb = Vector::Constant(1, 2.0);
    bad_bounds.ub = Vector::Constant(1, 1.0);
    CHECK_THROWS_AS(build_problem({bad_bounds}, Vector::Zero(1)), DimensionError);

    LocalBlock bad_g = square_block(Matrix::Ones(1, 1));
    bad_g.g = VectorField::affine(Matrix::Ones(1, 2), Vector::Zero(1));
    CHECK_THROWS_AS(build_problem({bad_g}, Vector::Zero(1)), DimensionError);

    CHECK_THROWS_AS(build_problem({square_block(Matrix::Ones(1, 1))}, Vector::Zero(1), {Vector::Zero(2)}),
                    DimensionError);
  }

  TEST_CASE("randomly malformed shapes are always rejected") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const int m = 1 + static_cast<int>(rng.uniform() * 3);
      const int N = 1 + static_cast<int>(rng.uniform() * 3);
      std::vector<LocalBlock> blocks;
      for (int i = 0; i < N; ++i) blocks.push_back(square_block(Matrix::Ones(m, 1 + i)));
      const int victim = static_cast<int>(rng.uniform() * N);
      const int kind = static_cast<int>(rng.uniform() * 3);
      Vector b = Vector::Zero(m);
      if (kind == 0) {
        blocks[victim].A = Matrix::Ones(m + 1, blocks[victim].n);
      } else if (kind == 1) {
        blocks[victim].A = Matrix::Ones(m, blocks[victim].n + 1);
      } else {
        b = Vector::Zero(m + 1);
      }
      CHECK_THROWS_AS(build_problem(blocks, b), DimensionError);
    }
  }

  TEST_CASE("bounds fold into affine inequality rows") {
    LocalBlock blk = square_block(Matrix::Ones(1, 2));
    blk.lb = Vector::Constant(2, -1.0);
    blk.ub = Vector(2);
    blk.ub << 3.0, std::numeric_limits<double>::infinity();
    const SeparableProblem p = build_problem({blk}, Vector::Zero(1));
    const LocalBlock& b0 = p.block(0);
    CHECK(b0.h.out_dim == 3);
    CHECK(b0.lb.size() == 0);
    const Vector h = b0.h(Vector::Zero(2));
    CHECK(h[0] == -1.0);
    CHECK(h[1] == -1.0);
    CHECK(h[2] == -3.0);
  }

  TEST_CASE("coupling_residual examples") {
    const SeparableProblem p =
        build_problem({square_block(Matrix::Ones(1, 1)), square_block(Matrix::Ones(1, 1))}, Vector::Constant(1, 2.0));
    CHECK(coupling_residual(p, {Vector::Ones(1), Vector::Ones(1)}).norm() == 0.0);
    const SeparableProblem q = build_problem({square_block(Matrix::Ones(2, 3))}, Vector::Zero(2));
    CHECK(coupling_residual(q, {Vector::Zero(3)}).norm() == 0.0);
    CHECK_THROWS_AS(coupling_residual(p, {Vector::Ones(1)}), DimensionError);
    CHECK_THROWS_AS(coupling_residual(p, {Vector::Ones(2), Vector::Ones(1)}), DimensionError);

    const SeparableProblem sensors = gen_sensor_problem(gen_sensor_scene(5, 0.0, 3));
    CHECK(sensors.coupling_rows() == 10);
    CHECK(coupling_residual(sensors, sensor_ground_truth(5)).norm() < 1e-12);
  }

  TEST_CASE("total_objective examples") {
    const SeparableProblem zero = build_problem({zero_block(Matrix::Ones(1, 1))}, Vector::Zero(1));
    CHECK(total_objective(zero, {Vector::Constant(1, 5.0)}) == 0.0);
    const SeparableProblem p =
        build_problem({square_block(Matrix::Ones(1, 1)), square_block(Matrix::Ones(1, 1))}, Vector::Zero(1));
    CHECK(total_objective(p, {Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)}) == 5.0);

    const LabeledDataset data = gen_synthetic_dataset(100, 2, 4);
    const SeparableProblem lg = gen_logistic_consensus(data, 10, 0.1);
    CHECK(total_objective(lg, initial_state(lg).x) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    ScalarField bad;
    bad.dim = 1;
    bad.eval = [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); };
    const SeparableProblem nan_problem =
        build_problem({square_block(Matrix::Ones(1, 1)), LocalBlock::unconstrained(bad, Matrix::Ones(1, 1))},
                      Vector::Zero(1));
    try {
      total_objective(nan_problem, {Vector::Zero(1), Vector::Zero(1)});
      FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
      CHECK(e.index() == 1);
    }
  }

  TEST_CASE("augmented_lagrangian examples and penalty decomposition") {
    const SeparableProblem one = build_problem({zero_block(Matrix::Ones(1, 1))}, Vector::Zero(1));
    CHECK(augmented_lagrangian(one, {Vector::Constant(1, 2.0)}, Vector::Ones(1), 2.0) == doctest::Approx(6.0));
    CHECK(augmented_lagrangian(one, {Vector::Constant(1, 2.0)}, Vector::Ones(1), 0.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(augmented_lagrangian(one, {Vector::Zero(1)}, Vector::Zero(1), -1.0), ConfigError);

    Rng rng(13);
    const QuadraticInstance inst = random_quadratic_instance(3, 3, 2, 8);
    const SeparableProblem p = build_quadratic_problem(inst);
    for (int k = 0; k < 50; ++k) {
      BlockVectors x;
      for (const auto& blk : p.blocks()) x.push_back(oracle::random_vector(rng, blk.n, -2, 2));
      const Vector lambda = oracle::random_vector(rng, p.coupling_rows(), -3, 3);
      const double rho = rng.uniform(0, 10);
      const double diff = augmented_lagrangian(p, x, lambda, rho) - augmented_lagrangian(p, x, lambda, 0.0);
      CHECK(diff == doctest::Approx(0.5 * rho * coupling_residual(p, x).squaredNorm()).epsilon(1e-12));
    }

    // A feasible point: the Lagrangian terms vanish for any lambda and rho.
    const SeparableProblem two =
        build_problem({square_block(Matrix::Ones(1, 1)), square_block(Matrix::Ones(1, 1))}, Vector::Constant(1, 2.0));
    const BlockVectors feasible = {Vector::Constant(1, 0.5), Vector::Constant(1, 1.5)};
    for (int k = 0; k < 10; ++k) {
      CHECK(augmented_lagrangian(two, feasible, oracle::random_vector(rng, 1, -5, 5), rng.uniform(0, 5)) ==
            doctest::Approx(total_objective(two, feasible)));
    }
  }

  TEST_CASE("consensus problems couple every block to the first") {
    const SeparableProblem p = gen_consensus_quadratic({Vector::Constant(2, 1.0), Vector::Constant(2, 3.0),
                                                        Vector::Constant(2, 5.0)});
    REQUIRE(p.consensus_dim());
    CHECK(*p.consensus_dim() == 2);
    CHECK(p.coupling_rows() == 4);
    const Vector v = Vector::Constant(2, 0.7);
    CHECK(coupling_residual(p, {v, v, v}).norm() == 0.0);
    CHECK(coupling_residual(p, {v, v, Vector::Zero(2)}).norm() > 0.5);
    CHECK_THROWS_AS(build_consensus_problem({square_block(Matrix(0, 1)), square_block(Matrix(0, 2))}),
                    DimensionError);
  }

  TEST_CASE("stack, split and stack_blocks") {
    const QuadraticInstance inst = random_quadratic_instance(3, 4, 2, 21);
    const SeparableProblem p = build_quadratic_problem(inst);
    Rng rng(1);
    BlockVectors x;
    for (const auto& blk : p.blocks()) x.push_back(oracle::random_vector(rng, blk.n));
    const Vector s = stack(x);
    CHECK(s.size() == p.total_dim());
    const BlockVectors back = split(p, s);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
    const LocalBlock whole = stack_blocks(p);
    CHECK(whole.n == p.total_dim());
    CHECK(whole.f(s) == doctest::Approx(total_objective(p, x)).epsilon(1e-14));
    CHECK((whole.A * s - p.b() - coupling_residual(p, x)).norm() < 1e-12);
    CHECK_THROWS_AS(split(p, Vector::Zero(p.total_dim() + 1)), DimensionError);
  }
}
