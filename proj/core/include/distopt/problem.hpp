#pragma once

#include "distopt/calculus.hpp"
#include "distopt/types.hpp"

#include <optional>
#include <vector>

namespace distopt {

/// One agent of a block-separable problem:
///   min f(x)  s.t.  g(x) = 0,  h(x) <= 0,  lb <= x <= ub,
/// contributing A x to the shared coupling sum_i A_i x_i = b.
struct LocalBlock {
  int n = 0;
  ScalarField f;
  VectorField g;  ///< equality constraints; empty field when absent
  VectorField h;  ///< inequality constraints; empty field when absent
  Matrix A;       ///< m_c x n coupling contribution
  Vector lb;      ///< empty means unbounded below
  Vector ub;      ///< empty means unbounded above

  /// Unconstrained block with the given objective and coupling matrix.
  static LocalBlock unconstrained(ScalarField f, Matrix A);
};

class SeparableProblem;

/// Validates shapes and returns the problem. Throws DimensionError naming the
/// offending block (or -1 for b / the block list itself).
SeparableProblem build_problem(std::vector<LocalBlock> blocks, Vector b,
                               BlockVectors initial_guess = {});

/// Blocks sharing one decision vector of dimension d. Coupling rows encode
/// x_1 - x_i = 0 for i = 2..N: A_1 stacks N-1 identities, A_i holds -I in row
/// block i-1. Any A supplied on the input blocks is replaced.
SeparableProblem build_consensus_problem(std::vector<LocalBlock> blocks,
                                         BlockVectors initial_guess = {});

/// Validated, immutable collection of blocks plus the coupling right-hand side.
///
/// Finite bounds are folded into each block's `h` as affine rows
/// (lb - x <= 0, then x - ub <= 0) appended after the user's rows, so every
/// solver sees a single inequality pathway.
class SeparableProblem {
 public:
  const std::vector<LocalBlock>& blocks() const noexcept { return blocks_; }
  const LocalBlock& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  const Vector& b() const noexcept { return b_; }
  int coupling_rows() const noexcept { return static_cast<int>(b_.size()); }
  int total_dim() const noexcept { return total_dim_; }
  /// Per-block starting point (zeros unless supplied at build time).
  const BlockVectors& initial_guess() const noexcept { return initial_; }
  /// Shared variable dimension when built by build_consensus_problem.
  std::optional<int> consensus_dim() const noexcept { return consensus_dim_; }
  bool has_local_constraints() const noexcept;

 private:
  friend SeparableProblem build_problem(std::vector<LocalBlock>, Vector, BlockVectors);
  friend SeparableProblem build_consensus_problem(std::vector<LocalBlock>, BlockVectors);

  std::vector<LocalBlock> blocks_;
  Vector b_;
  BlockVectors initial_;
  int total_dim_ = 0;
  std::optional<int> consensus_dim_;
};

/// Primal, auxiliary and multiplier iterates, all in block order.
struct IterateState {
  BlockVectors x;
  BlockVectors z;
  Vector lambda;
  BlockVectors gamma;  ///< equality multipliers per block
  BlockVectors mu;     ///< inequality multipliers per block, >= 0
};

/// x = z = initial guess, every multiplier zero.
IterateState initial_state(const SeparableProblem& p);

/// sum_i A_i x_i - b.
Vector coupling_residual(const SeparableProblem& p, const BlockVectors& x);

/// sum_i f_i(x_i). Throws EvaluationError naming the block on non-finite values.
double total_objective(const SeparableProblem& p, const BlockVectors& x);

/// sum f_i + lambda^T r + (rho / 2) |r|^2 with r the coupling residual.
double augmented_lagrangian(const SeparableProblem& p, const BlockVectors& x,
                            const Vector& lambda, double rho);

/// Concatenate per-block vectors.
Vector stack(const BlockVectors& parts);
/// Split a stacked vector into per-block pieces of the problem's block sizes.
BlockVectors split(const SeparableProblem& p, const Vector& stacked);

/// The whole problem as a single block over the stacked variable: f = sum f_i,
/// constraints concatenated in block order, A = [A_1 ... A_N]. Bounds are
/// already folded into h, so lb/ub stay empty.
LocalBlock stack_blocks(const SeparableProblem& p);

}  // namespace distopt
