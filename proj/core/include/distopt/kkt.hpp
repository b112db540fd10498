#pragma once

#include "distopt/types.hpp"

namespace distopt {

/// The block system
///
///     [ H  -A^T ] [ p        ]   [ rhs_top    ]
///     [ A   0   ] [ p_lambda ] = [ rhs_bottom ]
///
/// with H the Lagrangian Hessian and A the constraint Jacobian.
struct KktSystem {
  Matrix H;
  Matrix A;
  Vector rhs_top;
  Vector rhs_bottom;
};

struct KktSolution {
  Vector p;
  Vector p_lambda;
};

/// Reciprocal condition estimate below which a KKT matrix is treated as singular.
inline constexpr double kKktRcondThreshold = 1e-12;

/// Solves the KKT system by LU with partial pivoting on the assembled matrix.
/// Throws SingularKktError when A lacks full row rank or the assembled matrix
/// has an estimated reciprocal condition number below kKktRcondThreshold.
KktSolution solve_kkt(const KktSystem& sys);

/// Numerical row rank of A (column-pivoted QR, relative threshold).
int row_rank(const Matrix& A);

/// Clips every eigenvalue of the symmetric matrix H up to at least `delta`.
Matrix regularize_spd(const Matrix& H, double delta);

/// Smallest eigenvalue of the symmetric part of M.
double min_eigenvalue(const Matrix& M);

/// True iff M is symmetric within `tol` and its smallest eigenvalue is >= -tol.
bool is_positive_semidefinite(const Matrix& M, double tol = 1e-10);

/// Orthonormal basis (n x (n - rank)) of the nullspace of A, from a QR of A^T.
Matrix nullspace_basis(const Matrix& A);

}  // namespace distopt
