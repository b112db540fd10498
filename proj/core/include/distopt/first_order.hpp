#pragma once

#include "distopt/exec.hpp"
#include "distopt/problem.hpp"
#include "distopt/sqp.hpp"
#include "distopt/trace.hpp"

#include <cstdint>
#include <optional>

namespace distopt {

struct SolverConfig {
  double rho = 1.0;     ///< penalty weight
  double alpha = 0.1;   ///< dual ascent / decomposition step size
  int max_iter = 1000;
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double inner_tol = 1e-10;
  std::uint64_t seed = 0;
  ExecutionMode mode;
  /// Inner iterates beyond this infinity norm mark the Lagrangian unbounded below.
  double divergence_radius = 1e8;
  /// Proximal curvature floor for inner argmins whose Hessian is singular.
  double prox_reg = 1e-10;
  int oscillation_window = 20;

  /// Throws ConfigError on negative tolerances, non-positive steps or budgets.
  void validate() const;
};

struct SolveResult {
  IterateState state;
  ConvergenceTrace trace;
  SolveStatus status = SolveStatus::max_iter;
  /// Per-iteration, per-block active sets (filled by run_aladin only).
  std::vector<std::vector<ActiveSet>> active_sets;

  int iterations() const noexcept { return trace.iterations(); }
};

/// Gradient ascent on the dual of the whole problem treated as one block:
/// x <- argmin L(x, lambda), lambda <- lambda + alpha (A x - b). The trace's
/// objective column holds the dual value g(lambda^k) of each x-update.
SolveResult dual_ascent(const SeparableProblem& p, const SolverConfig& cfg,
                        const std::optional<IterateState>& start = std::nullopt);

/// Dual ascent with the x-update split into independent per-block argmins
/// (run through map_indexed under cfg.mode) and a gathered multiplier update.
/// Reports `oscillating` when the coupling residual has not decreased over
/// cfg.oscillation_window iterations while above 10 * tol_primal.
SolveResult dual_decomposition(const SeparableProblem& p, const SolverConfig& cfg,
                               const std::optional<IterateState>& start = std::nullopt);

/// Method of multipliers on the whole problem as one block; multiplier step is rho.
SolveResult method_of_multipliers(const SeparableProblem& p, const SolverConfig& cfg,
                                  const std::optional<IterateState>& start = std::nullopt);

/// ADMM on min f(x) + g(z) s.t. A x + B z = c. state.x = {x, z}; state.lambda = y.
SolveResult admm_two_block(const ScalarField& f, const ScalarField& g, const Matrix& A,
                           const Matrix& B, const Vector& c, const SolverConfig& cfg);

/// Consensus ADMM for problems from build_consensus_problem. Per-block
/// x-updates run under cfg.mode; z is the average of x_i + y_i / rho.
/// state.z holds copies of the consensus variable and state.lambda the
/// equivalent coupling multipliers (-y_2, ..., -y_N) of the x_1 - x_i = 0 rows.
SolveResult consensus_admm(const SeparableProblem& p, const SolverConfig& cfg);

struct DualityGap {
  double gap = 0.0;         ///< f(x) - g(lambda); +inf when diverged
  double dual_value = 0.0;  ///< g(lambda); -inf when diverged
  bool diverged = false;
};

/// f(x) - inf_x L(x, lambda) at a primal feasible x.
DualityGap duality_gap_estimate(const SeparableProblem& p, const BlockVectors& x,
                                const Vector& lambda, const SolverConfig& cfg = {});

}  // namespace distopt
