#include "distopt/calculus.hpp"

#include "distopt/errors.hpp"
#include "distopt/kkt.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace distopt {

namespace {

double checked(double value, int coordinate) {
  if (!std::isfinite(value)) {
    throw EvaluationError("non-finite function value at stencil point along coordinate " +
                              std::to_string(coordinate),
                          coordinate);
  }
  return value;
}

Vector checked(Vector value, int coordinate) {
  if (!value.allFinite()) {
    throw EvaluationError("non-finite vector value at stencil point along coordinate " +
                              std::to_string(coordinate),
                          coordinate);
  }
  return value;
}

double step_for(std::optional<double> h, double xj, double root_eps) {
  if (h) {
    if (!(*h > 0.0)) throw ConfigError("finite-difference step must be positive");
    return *h;
  }
  return root_eps * (1.0 + std::abs(xj));
}

const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());
const double kQuarticRootEps = std::pow(std::numeric_limits<double>::epsilon(), 0.25);

}  // namespace

VectorField VectorField::none(int in_dim) {
  VectorField F;
  F.in_dim = in_dim;
  F.out_dim = 0;
  F.eval = [](const Vector&) { return Vector(0); };
  F.jacobian = [in_dim](const Vector&) { return Matrix(0, in_dim); };
  F.weighted_hessian = [in_dim](const Vector&, const Vector&) {
    return Matrix::Zero(in_dim, in_dim).eval();
  };
  return F;
}

VectorField VectorField::affine(Matrix C, Vector d) {
  if (C.rows() != d.size()) throw DimensionError("affine map: C rows must equal d length");
  VectorField F;
  F.in_dim = static_cast<int>(C.cols());
  F.out_dim = static_cast<int>(C.rows());
  const int n = F.in_dim;
  F.eval = [C, d](const Vector& x) -> Vector { return C * x + d; };
  F.jacobian = [C](const Vector&) { return C; };
  F.weighted_hessian = [n](const Vector&, const Vector&) { return Matrix::Zero(n, n).eval(); };
  return F;
}

VectorField VectorField::concat(const VectorField& first, const VectorField& second) {
  if (first.in_dim != second.in_dim) {
    throw DimensionError("cannot concatenate vector fields with different input dimensions");
  }
  if (first.empty()) return second;
  if (second.empty()) return first;
  VectorField F;
  F.in_dim = first.in_dim;
  F.out_dim = first.out_dim + second.out_dim;
  const int m1 = first.out_dim;
  const int m2 = second.out_dim;
  F.eval = [first, second, m1, m2](const Vector& x) {
    Vector out(m1 + m2);
    out << first(x), second(x);
    return out;
  };
  F.jacobian = [first, second](const Vector& x) {
    const Matrix J1 = jacobian_of(first, x);
    const Matrix J2 = jacobian_of(second, x);
    Matrix J(J1.rows() + J2.rows(), J1.cols());
    J << J1, J2;
    return J;
  };
  F.weighted_hessian = [first, second, m1, m2](const Vector& x, const Vector& w) {
    return (weighted_hessian_of(first, x, w.head(m1)) +
            weighted_hessian_of(second, x, w.tail(m2)))
        .eval();
  };
  return F;
}

double default_fd_step(double xj) { return kCbrtEps * (1.0 + std::abs(xj)); }

Vector fd_gradient(const ScalarField& f, const Vector& x, std::optional<double> h) {
  const Eigen::Index n = x.size();
  Vector grad(n);
  Vector probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double hj = step_for(h, x[j], kCbrtEps);
    probe[j] = x[j] + hj;
    const double fp = checked(f(probe), static_cast<int>(j));
    probe[j] = x[j] - hj;
    const double fm = checked(f(probe), static_cast<int>(j));
    probe[j] = x[j];
    grad[j] = (fp - fm) / (2.0 * hj);
  }
  return grad;
}

Matrix fd_jacobian(const VectorField& F, const Vector& x, std::optional<double> h) {
  const Eigen::Index n = x.size();
  Matrix J(F.out_dim, n);
  Vector probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double hj = step_for(h, x[j], kCbrtEps);
    probe[j] = x[j] + hj;
    const Vector fp = checked(F(probe), static_cast<int>(j));
    probe[j] = x[j] - hj;
    const Vector fm = checked(F(probe), static_cast<int>(j));
    probe[j] = x[j];
    if (fp.size() != F.out_dim || fm.size() != F.out_dim) {
      throw DimensionError("vector field returned a value of unexpected length");
    }
    J.col(j) = (fp - fm) / (2.0 * hj);
  }
  return J;
}

Matrix fd_hessian(const ScalarField& f, const Vector& x, std::optional<double> h) {
  const Eigen::Index n = x.size();
  Vector steps(n);
  for (Eigen::Index j = 0; j < n; ++j) steps[j] = step_for(h, x[j], kQuarticRootEps);

  const double f0 = checked(f(x), -1);
  Matrix H(n, n);
  Vector probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = steps[i];
    probe[i] = x[i] + hi;
    const double fp = checked(f(probe), static_cast<int>(i));
    probe[i] = x[i] - hi;
    const double fm = checked(f(probe), static_cast<int>(i));
    probe[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);

    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = steps[j];
      auto at = [&](double si, double sj) {
        probe[i] = x[i] + si * hi;
        probe[j] = x[j] + sj * hj;
        const double v = checked(f(probe), static_cast<int>(j));
        probe[i] = x[i];
        probe[j] = x[j];
        return v;
      };
      const double mixed = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
      H(i, j) = mixed;
      H(j, i) = mixed;
    }
  }
  return (0.5 * (H + H.transpose())).eval();
}

Vector gradient_of(const ScalarField& f, const Vector& x) {
  return f.gradient ? f.gradient(x) : fd_gradient(f, x);
}

Matrix hessian_of(const ScalarField& f, const Vector& x) {
  return f.hessian ? f.hessian(x) : fd_hessian(f, x);
}

Matrix jacobian_of(const VectorField& F, const Vector& x) {
  if (F.out_dim == 0) return Matrix(0, x.size());
  return F.jacobian ? F.jacobian(x) : fd_jacobian(F, x);
}

Matrix weighted_hessian_of(const VectorField& F, const Vector& x, const Vector& weights) {
  const Eigen::Index n = x.size();
  if (F.out_dim == 0 || weights.isZero(0.0)) return Matrix::Zero(n, n);
  if (F.weighted_hessian) return F.weighted_hessian(x, weights);
  ScalarField combined;
  combined.dim = static_cast<int>(n);
  combined.eval = [&F, &weights](const Vector& y) { return weights.dot(F(y)); };
  return fd_hessian(combined, x);
}

double newton_raphson(const std::function<double(double)>& f,
                      const std::function<double(double)>& df,
                      double x0, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ConfigError("newton_raphson: tol must be positive");
  if (max_iter < 1) throw ConfigError("newton_raphson: max_iter must be at least 1");
  double x = x0;
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (std::abs(fx) <= tol) return x;
    const double dfx = df(x);
    if (!(std::abs(dfx) >= kDerivativeFloor)) {
      throw SingularDerivativeError("newton_raphson: derivative below floor", x);
    }
    x -= fx / dfx;
  }
  if (std::abs(f(x)) <= tol) return x;
  throw NonConvergenceError("newton_raphson: iteration budget exhausted", x);
}

double weighted_norm(const Vector& x, const Matrix& Sigma, double tol) {
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() != x.size()) {
    throw DimensionError("weighted_norm: Sigma must be square and match x");
  }
  if (!is_positive_semidefinite(Sigma, tol)) {
    throw NotPsdError("weighted_norm: Sigma is not positive semidefinite");
  }
  const double q = x.dot(Sigma * x);
  if (q < -tol) throw NotPsdError("weighted_norm: negative quadratic form");
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace distopt
