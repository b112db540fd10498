#pragma once

#include "distopt/calculus.hpp"
#include "distopt/trace.hpp"
#include "distopt/types.hpp"

#include <vector>

namespace distopt {

/// min f(x) s.t. c(x) = 0, with Lagrangian L(x, lambda) = f(x) - lambda^T c(x).
struct SqpProblem {
  ScalarField f;
  VectorField c;
};

/// F(x, lambda) = (grad f(x) - A(x)^T lambda, c(x)), A the Jacobian of c.
Vector kkt_residual(const SqpProblem& prob, const Vector& x, const Vector& lambda);

enum class SqpStepForm {
  /// Solve for (p, p_lambda) with rhs (-grad f + A^T lambda, -c), then lambda + p_lambda.
  newton_increment,
  /// Solve for (p, lambda_next) directly with rhs (-grad f, -c).
  multiplier,
};

struct SqpStepOptions {
  SqpStepForm form = SqpStepForm::multiplier;
  /// Curvature floor used when the reduced Hessian is not positive definite.
  double hessian_delta = 1.0;
  bool regularize = true;
};

struct SqpStep {
  Vector p;
  Vector lambda_next;
  bool regularized = false;
};

/// One Newton step on the KKT conditions. Throws SingularKktError when the
/// KKT matrix is singular (rank-deficient Jacobian included).
SqpStep sqp_step(const SqpProblem& prob, const Vector& x, const Vector& lambda,
                 const SqpStepOptions& options = {});

/// True when the Hessian is positive definite on the nullspace of A.
bool tangent_curvature_positive(const Matrix& H, const Matrix& A, double tol = 1e-12);

struct SqpConfig {
  int max_iter = 50;
  double tol = 1e-10;  ///< on |F(x, lambda)|_2
  SqpStepOptions step;
};

enum class SqpStatus { converged, max_iter, diverged };

struct SqpResult {
  Vector x;
  Vector lambda;
  ConvergenceTrace trace;
  SqpStatus status = SqpStatus::max_iter;
  int iterations = 0;  ///< Newton steps taken
  double residual_norm = 0.0;
  /// (x_k, lambda_k) stacked, one entry per visited iterate including the start.
  std::vector<Vector> history;
};

/// Plain Newton iteration on the KKT system, regularizing the Lagrangian
/// Hessian when its tangent-space curvature test fails. No globalization.
SqpResult sqp_solve(const SqpProblem& prob, const Vector& x0, const Vector& lambda0,
                    const SqpConfig& cfg = {});

/// Sorted, duplicate-free inequality row indices treated as equalities.
struct ActiveSet {
  std::vector<int> indices;

  bool contains(int j) const;
  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  friend bool operator==(const ActiveSet&, const ActiveSet&) = default;
};

inline constexpr double kDefaultEpsAct = 1e-6;

/// Rows j with h_j(x) >= -eps_act.
ActiveSet detect_active_set(const VectorField& h, const Vector& x, double eps_act = kDefaultEpsAct);

/// Rows of a Jacobian / vector restricted to an active set.
Matrix select_rows(const Matrix& M, const ActiveSet& set);
Vector select_rows(const Vector& v, const ActiveSet& set);

/// min f(x) s.t. g(x) = 0, h(x) <= 0 with multipliers in the convention
/// L = f + gamma^T g + mu^T h, mu >= 0.
struct LocalNlp {
  ScalarField objective;
  VectorField equalities;
  VectorField inequalities;
};

struct LocalNlpOptions {
  double tol = 1e-10;  ///< relative KKT tolerance
  int max_iter = 200;  ///< Newton steps plus working-set changes
  double hessian_delta = 1e-8;
  double feas_tol = 1e-9;
  double mult_tol = 1e-9;
  double eps_act = kDefaultEpsAct;
  /// Armijo backtracking on the objective while no constraint is in the working set.
  bool line_search = false;
  double divergence_radius = 1e8;
};

enum class LocalNlpStatus { converged, max_iter, diverged };

struct LocalNlpResult {
  Vector x;
  Vector gamma;
  Vector mu;
  ActiveSet working_set;  ///< inequality rows held as equalities at exit
  ActiveSet active;       ///< detect_active_set at the returned x
  LocalNlpStatus status = LocalNlpStatus::max_iter;
  int iterations = 0;
  double kkt_norm = 0.0;  ///< |(grad L, g, h_W)|_2 at exit
};

/// Working-set SQP: Newton steps on the equality-constrained problem formed by
/// g and the working rows of h; a row enters when a step would violate it and
/// leaves when its multiplier turns negative at a KKT point.
LocalNlpResult solve_local_nlp(const LocalNlp& nlp, const Vector& x0,
                               const LocalNlpOptions& options = {});

}  // namespace distopt
