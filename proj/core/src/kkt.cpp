#include "distopt/kkt.hpp"

#include "distopt/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace distopt {

namespace {

constexpr double kRankTolerance = 1e-10;

void check_shapes(const KktSystem& sys) {
  const auto n = sys.H.rows();
  if (sys.H.cols() != n) throw DimensionError("solve_kkt: H must be square");
  if (sys.rhs_top.size() != n) throw DimensionError("solve_kkt: rhs_top length must equal H size");
  if (sys.A.rows() != sys.rhs_bottom.size()) {
    throw DimensionError("solve_kkt: A rows must equal rhs_bottom length");
  }
  if (sys.A.rows() > 0 && sys.A.cols() != n) {
    throw DimensionError("solve_kkt: A columns must equal H size");
  }
}

}  // namespace

int row_rank(const Matrix& A) {
  if (A.rows() == 0) return 0;
  if (A.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  if (qr.maxPivot() == 0.0) return 0;
  qr.setThreshold(kRankTolerance);
  return static_cast<int>(qr.rank());
}

KktSolution solve_kkt(const KktSystem& sys) {
  check_shapes(sys);
  const auto n = sys.H.rows();
  const auto m = sys.A.rows();

  if (m > 0) {
    const int rank = row_rank(sys.A);
    if (rank < m) {
      throw SingularKktError("solve_kkt: constraint Jacobian lacks full row rank (rank " +
                                 std::to_string(rank) + " of " + std::to_string(m) + ")",
                             0.0, rank, static_cast<int>(m));
    }
  }

  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = sys.H;
  if (m > 0) {
    K.topRightCorner(n, m) = -sys.A.transpose();
    K.bottomLeftCorner(m, n) = sys.A;
  }
  Vector rhs(n + m);
  rhs << sys.rhs_top, sys.rhs_bottom;

  // Row equilibration keeps the condition estimate meaningful when the
  // Hessian and Jacobian blocks live on very different scales.
  Vector row_scale = K.rowwise().lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < row_scale.size(); ++i) {
    row_scale[i] = row_scale[i] > 0.0 ? 1.0 / row_scale[i] : 1.0;
  }
  const Matrix Ks = row_scale.asDiagonal() * K;
  const Vector rhs_s = row_scale.asDiagonal() * rhs;

  Eigen::PartialPivLU<Matrix> lu(Ks);
  const double rcond = lu.rcond();
  if (!(rcond >= kKktRcondThreshold)) {
    Eigen::FullPivLU<Matrix> full(Ks);
    throw SingularKktError("solve_kkt: KKT matrix is singular (rcond estimate " +
                               std::to_string(rcond) + ")",
                           rcond, static_cast<int>(full.rank()), static_cast<int>(n + m));
  }
  Vector sol = lu.solve(rhs_s);
  // One step of iterative refinement on the unscaled system.
  sol += lu.solve(row_scale.asDiagonal() * (rhs - K * sol));

  KktSolution out;
  out.p = sol.head(n);
  out.p_lambda = sol.tail(m);
  return out;
}

Matrix regularize_spd(const Matrix& H, double delta) {
  if (!(delta > 0.0)) throw ConfigError("regularize_spd: delta must be positive");
  if (H.rows() != H.cols()) throw DimensionError("regularize_spd: H must be square");
  if (H.rows() == 0) return H;
  const Matrix sym = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& values = eig.eigenvalues();
  if (values.minCoeff() >= delta) return sym;
  const Vector clipped = values.cwiseMax(delta);
  const Matrix& V = eig.eigenvectors();
  Matrix out = V * clipped.asDiagonal() * V.transpose();
  return (0.5 * (out + out.transpose())).eval();
}

double min_eigenvalue(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("min_eigenvalue: matrix must be square");
  if (M.rows() == 0) return std::numeric_limits<double>::infinity();
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_positive_semidefinite(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  if (M.rows() == 0) return true;
  if (((M - M.transpose()).cwiseAbs().maxCoeff()) > tol) return false;
  return min_eigenvalue(M) >= -tol;
}

Matrix nullspace_basis(const Matrix& A) {
  const auto n = A.cols();
  if (A.rows() == 0) return Matrix::Identity(n, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  const auto rank = qr.rank();
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - rank);
}

}  // namespace distopt
