#include "distopt/errors.hpp"
#include "distopt/kkt.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace distopt;

TEST_SUITE("kkt-linalg") {
  TEST_CASE("solve_kkt closed-form example") {
    KktSystem sys{Matrix::Identity(2, 2), Matrix::Ones(1, 2), Vector::Zero(2), Vector::Constant(1, 2.0)};
    const KktSolution s = solve_kkt(sys);
    CHECK((s.p - Vector::Ones(2)).norm() < 1e-14);
    CHECK(s.p_lambda[0] == doctest::Approx(1.0));
  }

  TEST_CASE("homogeneous system has the zero solution") {
    Matrix H(3, 3);
    H << 4, 1, 0, 1, 3, 0, 0, 0, 2;
    KktSystem sys{H, Matrix::Identity(1, 3), Vector::Zero(3), Vector::Zero(1)};
    const KktSolution s = solve_kkt(sys);
    CHECK(s.p.norm() == 0.0);
    CHECK(s.p_lambda.norm() == 0.0);
  }

  TEST_CASE("rank-deficient constraint matrix is rejected") {
    KktSystem sys{Matrix::Identity(2, 2), Matrix::Zero(1, 2), Vector::Zero(2), Vector::Ones(1)};
    CHECK_THROWS_AS(solve_kkt(sys), SingularKktError);
    Matrix A(2, 3);
    A << 1, 2, 3, 2, 4, 6;
    KktSystem dup{Matrix::Identity(3, 3), A, Vector::Zero(3), Vector::Ones(2)};
    try {
      solve_kkt(dup);
      FAIL("expected SingularKktError");
    } catch (const SingularKktError& e) {
      CHECK(e.rank() == 1);
      CHECK(e.expected_rank() == 2);
    }
  }

  TEST_CASE("singular Hessian on the nullspace is rejected") {
    KktSystem sys{Matrix::Zero(2, 2), Matrix::Zero(0, 2), Vector::Ones(2), Vector::Zero(0)};
    CHECK_THROWS_AS(solve_kkt(sys), SingularKktError);
  }

  TEST_CASE("shape mismatches are dimension errors") {
    KktSystem sys{Matrix::Identity(2, 2), Matrix::Ones(1, 2), Vector::Zero(3), Vector::Zero(1)};
    CHECK_THROWS_AS(solve_kkt(sys), DimensionError);
  }

  TEST_CASE("random non-singular systems reproduce the right-hand side") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(rng.uniform() * 8);
      const int m = static_cast<int>(rng.uniform() * (std::min(n, 4) + 1));
      const Matrix M = oracle::random_matrix(rng, n, n);
      const Matrix H = M.transpose() * M + Matrix::Identity(n, n);
      const Matrix A = oracle::random_matrix(rng, m, n);
      if (m > 0 && Eigen::JacobiSVD<Matrix>(A).singularValues().minCoeff() < 1e-3) continue;
      const Vector top = oracle::random_vector(rng, n);
      const Vector bottom = oracle::random_vector(rng, m);
      const KktSolution s = solve_kkt({H, A, top, bottom});
      const Vector r1 = H * s.p - A.transpose() * s.p_lambda - top;
      const Vector r2 = A * s.p - bottom;
      const double scale = 1.0 + std::hypot(top.norm(), bottom.norm());
      CHECK(std::hypot(r1.norm(), r2.norm()) / scale < 1e-10);
    }
  }

  TEST_CASE("regularize_spd examples") {
    CHECK((regularize_spd(Matrix::Identity(3, 3), 0.1) - Matrix::Identity(3, 3)).norm() < 1e-14);
    CHECK((regularize_spd(Matrix::Zero(2, 2), 0.1) - 0.1 * Matrix::Identity(2, 2)).norm() < 1e-14);
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = -1;
    D(1, 1) = 2;
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 0.1;
    expect(1, 1) = 2;
    CHECK((regularize_spd(D, 0.1) - expect).norm() < 1e-12);
  }

  TEST_CASE("regularize_spd matches the eigen-clip oracle, is idempotent and bounds the quadratic form") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 1 + static_cast<int>(rng.uniform() * 6);
      const Matrix M = oracle::random_matrix(rng, n, n);
      const Matrix S = 0.5 * (M + M.transpose());
      const double delta = 0.05 + rng.uniform();
      const Matrix R = regularize_spd(S, delta);
      CHECK((R - oracle::eigen_clip(S, delta)).norm() < 1e-10);
      CHECK((regularize_spd(R, delta) - R).norm() < 1e-12);
      CHECK(is_positive_semidefinite(R));
      CHECK(min_eigenvalue(R) >= delta - 1e-10);
      for (int k = 0; k < 100; ++k) {
        const Vector v = oracle::random_vector(rng, n, -2, 2);
        CHECK(v.dot(R * v) >= delta * v.squaredNorm() - 1e-8);
      }
    }
  }

  TEST_CASE("is_positive_semidefinite examples") {
    CHECK(is_positive_semidefinite(Matrix::Identity(3, 3)));
    Matrix M(2, 2);
    M << 1, 2, 2, 1;
    CHECK_FALSE(is_positive_semidefinite(M));
    CHECK(is_positive_semidefinite(Matrix::Zero(4, 4)));
    Matrix asym(2, 2);
    asym << 1, 1, 0, 1;
    CHECK_FALSE(is_positive_semidefinite(asym));
  }

  TEST_CASE("nullspace basis and row rank") {
    Matrix A(1, 3);
    A << 1, 1, 1;
    const Matrix Z = nullspace_basis(A);
    CHECK(Z.cols() == 2);
    CHECK((A * Z).norm() < 1e-12);
    CHECK((Z.transpose() * Z - Matrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(row_rank(A) == 1);
    CHECK(row_rank(Matrix::Zero(2, 2)) == 0);
    CHECK(nullspace_basis(Matrix::Zero(0, 3)).cols() == 3);
  }
}
