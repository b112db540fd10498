#pragma once

#include "distopt/exec.hpp"
#include "distopt/first_order.hpp"
#include "distopt/problem.hpp"
#include "distopt/sqp.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace distopt {

enum class HessianMode {
  exact_fd,     ///< finite-difference Lagrangian Hessian, analytic second derivatives ignored
  analytic,     ///< analytic where the block supplies it, finite differences otherwise
  regularized,  ///< as analytic, then always passed through regularize_spd
};

std::optional<HessianMode> parse_hessian_mode(std::string_view text);
std::string_view to_string(HessianMode mode);

inline constexpr double kAladinHessianFloor = 1e-6;

struct AladinConfig {
  double rho = 1e3;  ///< coordination penalty
  double nu = 1e4;   ///< proximal weight of the local steps
  /// Per-block scaling of the proximal term; empty means identity for every block.
  std::vector<Matrix> sigma;
  /// Dual step. Unset means rho, which makes the dual update coincide with the
  /// coordination QP multiplier.
  std::optional<double> alpha;
  int max_iter = 50;
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double eps_act = kDefaultEpsAct;
  double inner_tol = 1e-10;
  int inner_max_iter = 200;
  HessianMode hessian_mode = HessianMode::analytic;
  ExecutionMode mode;

  double dual_step() const noexcept { return alpha.value_or(rho); }
  /// Throws ConfigError for non-positive weights, bad sigma shapes or
  /// sigma matrices that are not positive definite.
  void validate(const SeparableProblem& p) const;
};

struct LocalStepResult {
  Vector x;
  Vector gamma;
  Vector mu;
  ActiveSet active;
  LocalNlpStatus status = LocalNlpStatus::max_iter;
  double kkt_norm = 0.0;
};

/// argmin f(x) + lambda^T A x + (nu / 2) |x - z|^2_sigma subject to the block's
/// constraints, started at z.
LocalStepResult local_step(const LocalBlock& block, const Vector& lambda, const Vector& z,
                           const Matrix& sigma, const AladinConfig& cfg);

/// Positive definite approximation of the Lagrangian Hessian of f + gamma^T g + mu^T h.
Matrix hessian_approx(const LocalBlock& block, const Vector& x, const Vector& gamma,
                      const Vector& mu, const AladinConfig& cfg);

/// min sum_i (1/2) dx_i^T B_i dx_i + grad_i^T dx_i + lambda^T r(dx) + (rho/2) |r(dx)|^2
/// s.t. C_i dx_i = -c_i, where r(dx) = sum_i A_i (x_i + dx_i) - b.
struct CoordinationQp {
  std::vector<Matrix> B;
  BlockVectors grad;
  std::vector<Matrix> C;  ///< equality Jacobian stacked over the active inequality rows
  BlockVectors c;         ///< matching constraint values
  BlockVectors x;
  std::vector<Matrix> A;
  Vector b;
  Vector lambda;
  double rho = 0.0;
};

struct CoordinationStep {
  BlockVectors delta_x;
  Vector lambda_qp;
};

/// One stacked KKT solve. Throws DimensionError on shape mismatch,
/// CoordinationInfeasibleError when a block's linearized constraints are
/// inconsistent and SingularKktError when the stacked system is singular.
CoordinationStep coordination_step(const CoordinationQp& qp);

/// Builds the coordination QP for the local results at multiplier lambda.
CoordinationQp build_coordination_qp(const SeparableProblem& p,
                                     const std::vector<LocalStepResult>& local,
                                     const Vector& lambda, const AladinConfig& cfg);

Vector dual_update(const Vector& lambda, double alpha, const Vector& residual_next);

/// ALADIN outer loop. Trace columns: primal_res = coupling residual at the
/// updated iterate, dual_res = |x_local - z| over all blocks, step_norm = |dx|.
/// Throws BlockFailureError when a local step fails and SolverFailure when
/// the coordination QP cannot be solved; both carry the partial trace.
SolveResult run_aladin(const SeparableProblem& p, const AladinConfig& cfg,
                       const std::optional<IterateState>& start = std::nullopt);

}  // namespace distopt
