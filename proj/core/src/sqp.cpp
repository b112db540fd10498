#include "distopt/sqp.hpp"

#include "distopt/errors.hpp"
#include "distopt/kkt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace distopt {

namespace {

using Clock = std::chrono::steady_clock;

void check_sqp_shapes(const SqpProblem& prob, const Vector& x, const Vector& lambda) {
  if (x.size() != prob.f.dim) throw DimensionError("sqp: x length differs from objective dimension");
  if (prob.c.out_dim > 0 && prob.c.in_dim != prob.f.dim) {
    throw DimensionError("sqp: constraint input dimension differs from objective dimension");
  }
  if (lambda.size() != prob.c.out_dim) {
    throw DimensionError("sqp: multiplier length differs from constraint count");
  }
}

Vector constraint_values(const VectorField& c, const Vector& x) {
  return c.out_dim == 0 ? Vector(0) : c(x);
}

}  // namespace

Vector kkt_residual(const SqpProblem& prob, const Vector& x, const Vector& lambda) {
  check_sqp_shapes(prob, x, lambda);
  const Vector grad = gradient_of(prob.f, x);
  const Matrix A = jacobian_of(prob.c, x);
  Vector F(x.size() + lambda.size());
  F.head(x.size()) = grad - A.transpose() * lambda;
  F.tail(lambda.size()) = constraint_values(prob.c, x);
  return F;
}

bool tangent_curvature_positive(const Matrix& H, const Matrix& A, double tol) {
  const Matrix Z = nullspace_basis(A);
  if (Z.cols() == 0) return true;
  const Matrix reduced = Z.transpose() * H * Z;
  return min_eigenvalue(reduced) > tol;
}

SqpStep sqp_step(const SqpProblem& prob, const Vector& x, const Vector& lambda,
                 const SqpStepOptions& options) {
  check_sqp_shapes(prob, x, lambda);
  const Vector grad = gradient_of(prob.f, x);
  const Matrix A = jacobian_of(prob.c, x);
  const Vector c = constraint_values(prob.c, x);

  Matrix H = hessian_of(prob.f, x);
  if (prob.c.out_dim > 0) H -= weighted_hessian_of(prob.c, x, lambda);
  H = 0.5 * (H + H.transpose());

  SqpStep step;
  if (options.regularize && !tangent_curvature_positive(H, A)) {
    H = regularize_spd(H, options.hessian_delta);
    step.regularized = true;
  }

  KktSystem sys;
  sys.H = std::move(H);
  sys.A = A;
  sys.rhs_bottom = -c;
  if (options.form == SqpStepForm::newton_increment) {
    sys.rhs_top = -grad + A.transpose() * lambda;
    KktSolution sol = solve_kkt(sys);
    step.p = std::move(sol.p);
    step.lambda_next = lambda + sol.p_lambda;
  } else {
    sys.rhs_top = -grad;
    KktSolution sol = solve_kkt(sys);
    step.p = std::move(sol.p);
    step.lambda_next = std::move(sol.p_lambda);
  }
  return step;
}

SqpResult sqp_solve(const SqpProblem& prob, const Vector& x0, const Vector& lambda0,
                    const SqpConfig& cfg) {
  if (cfg.max_iter < 1) throw ConfigError("sqp_solve: max_iter must be at least 1");
  if (!(cfg.tol > 0.0)) throw ConfigError("sqp_solve: tol must be positive");
  check_sqp_shapes(prob, x0, lambda0);

  const auto start = Clock::now();
  SqpResult res;
  res.x = x0;
  res.lambda = lambda0;
  Vector last_step = Vector::Zero(x0.size());

  for (int k = 0;; ++k) {
    const Vector F = kkt_residual(prob, res.x, res.lambda);
    const auto n = res.x.size();
    res.residual_norm = F.norm();

    Vector joint(n + res.lambda.size());
    joint << res.x, res.lambda;
    res.history.push_back(joint);

    TraceRecord rec;
    rec.iter = k;
    rec.objective = prob.f(res.x);
    rec.primal_res = F.tail(res.lambda.size()).norm();
    rec.dual_res = F.head(n).norm();
    rec.step_norm = last_step.norm();
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    res.trace.append(rec);

    if (!std::isfinite(res.residual_norm)) {
      res.status = SqpStatus::diverged;
      return res;
    }
    if (res.residual_norm <= cfg.tol) {
      res.status = SqpStatus::converged;
      return res;
    }
    if (k >= cfg.max_iter) {
      res.status = SqpStatus::max_iter;
      return res;
    }
    SqpStep step = sqp_step(prob, res.x, res.lambda, cfg.step);
    res.x += step.p;
    res.lambda = std::move(step.lambda_next);
    last_step = std::move(step.p);
    res.iterations = k + 1;
  }
}

bool ActiveSet::contains(int j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

ActiveSet detect_active_set(const VectorField& h, const Vector& x, double eps_act) {
  if (!(eps_act >= 0.0)) throw ConfigError("detect_active_set: eps_act must be nonnegative");
  ActiveSet set;
  if (h.out_dim == 0) return set;
  const Vector values = h(x);
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (values[j] >= -eps_act) set.indices.push_back(static_cast<int>(j));
  }
  return set;
}

Matrix select_rows(const Matrix& M, const ActiveSet& set) {
  Matrix out(static_cast<Eigen::Index>(set.size()), M.cols());
  for (std::size_t r = 0; r < set.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = M.row(set.indices[r]);
  return out;
}

Vector select_rows(const Vector& v, const ActiveSet& set) {
  Vector out(static_cast<Eigen::Index>(set.size()));
  for (std::size_t r = 0; r < set.size(); ++r) out[static_cast<Eigen::Index>(r)] = v[set.indices[r]];
  return out;
}

}  // namespace distopt
