#pragma once

#include "distopt/types.hpp"

#include <functional>
#include <optional>

namespace distopt {

/// f : R^n -> R, optionally with analytic derivatives. When `gradient` or
/// `hessian` is empty, gradient_of / hessian_of fall back to finite differences.
struct ScalarField {
  std::function<double(const Vector&)> eval;
  int dim = 0;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;

  double operator()(const Vector& x) const { return eval(x); }
};

/// F : R^n -> R^m. `weighted_hessian(x, w)` returns sum_j w_j * hess F_j(x).
struct VectorField {
  std::function<Vector(const Vector&)> eval;
  int in_dim = 0;
  int out_dim = 0;
  std::function<Matrix(const Vector&)> jacobian;
  std::function<Matrix(const Vector&, const Vector&)> weighted_hessian;

  Vector operator()(const Vector& x) const { return eval(x); }
  bool empty() const noexcept { return out_dim == 0; }

  /// R^n -> R^0.
  static VectorField none(int in_dim);
  /// x -> C x + d, with exact Jacobian and zero curvature.
  static VectorField affine(Matrix C, Vector d);
  /// Rows of `first` followed by rows of `second`; both must share in_dim.
  static VectorField concat(const VectorField& first, const VectorField& second);
};

/// Default central-difference step for coordinate value `xj`: cbrt(eps) * (1 + |xj|).
double default_fd_step(double xj);

/// Central-difference gradient. A fixed `h` overrides the scaled default.
Vector fd_gradient(const ScalarField& f, const Vector& x, std::optional<double> h = std::nullopt);

/// Central-difference Jacobian, out_dim x in_dim; row i approximates grad F_i.
Matrix fd_jacobian(const VectorField& F, const Vector& x, std::optional<double> h = std::nullopt);

/// Second central differences, symmetrized as (H + H^T) / 2. The default step
/// is eps^(1/4) * (1 + |xj|).
Matrix fd_hessian(const ScalarField& f, const Vector& x, std::optional<double> h = std::nullopt);

// Analytic derivative when supplied, finite differences otherwise.
Vector gradient_of(const ScalarField& f, const Vector& x);
Matrix hessian_of(const ScalarField& f, const Vector& x);
Matrix jacobian_of(const VectorField& F, const Vector& x);
Matrix weighted_hessian_of(const VectorField& F, const Vector& x, const Vector& weights);

inline constexpr double kDerivativeFloor = 1e-12;

/// Scalar Newton-Raphson: x <- x - f(x) / f'(x) until |f(x)| <= tol.
/// Throws SingularDerivativeError when |f'(x)| < kDerivativeFloor and
/// NonConvergenceError (carrying the last iterate) after max_iter steps.
double newton_raphson(const std::function<double(double)>& f,
                      const std::function<double(double)>& df,
                      double x0, double tol, int max_iter);

/// sqrt(x^T Sigma x). Throws NotPsdError when Sigma is not symmetric PSD
/// within `tol` or the quadratic form is below -tol.
double weighted_norm(const Vector& x, const Matrix& Sigma, double tol = 1e-10);

}  // namespace distopt
