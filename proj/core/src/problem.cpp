#include "distopt/problem.hpp"

#include "distopt/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace distopt {

namespace {

std::string block_tag(std::size_t i) { return "block " + std::to_string(i); }

/// Rows lb_j - x_j <= 0 for finite lb_j, then x_j - ub_j <= 0 for finite ub_j.
VectorField bound_rows(int n, const Vector& lb, const Vector& ub) {
  std::vector<std::pair<int, double>> rows;  // (coordinate, sign) as +-1
  std::vector<double> offsets;
  for (int j = 0; j < lb.size(); ++j) {
    if (std::isfinite(lb[j])) {
      rows.emplace_back(j, -1.0);
      offsets.push_back(lb[j]);
    }
  }
  for (int j = 0; j < ub.size(); ++j) {
    if (std::isfinite(ub[j])) {
      rows.emplace_back(j, 1.0);
      offsets.push_back(-ub[j]);
    }
  }
  if (rows.empty()) return VectorField::none(n);
  Matrix C = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), n);
  Vector d(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    C(static_cast<Eigen::Index>(r), rows[r].first) = rows[r].second;
    d[static_cast<Eigen::Index>(r)] = offsets[r];
  }
  return VectorField::affine(std::move(C), std::move(d));
}

void normalize_and_validate(std::vector<LocalBlock>& blocks, Eigen::Index m_c) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    LocalBlock& blk = blocks[i];
    const int idx = static_cast<int>(i);
    if (blk.n <= 0) throw DimensionError(block_tag(i) + ": dimension must be positive", idx);
    if (!blk.f.eval) throw DimensionError(block_tag(i) + ": missing objective", idx);
    if (blk.f.dim != blk.n) {
      throw DimensionError(block_tag(i) + ": objective dimension differs from block dimension", idx);
    }
    if (!blk.g.eval) blk.g = VectorField::none(blk.n);
    if (!blk.h.eval) blk.h = VectorField::none(blk.n);
    if (blk.g.in_dim != blk.n) {
      throw DimensionError(block_tag(i) + ": equality constraint input dimension mismatch", idx);
    }
    if (blk.h.in_dim != blk.n) {
      throw DimensionError(block_tag(i) + ": inequality constraint input dimension mismatch", idx);
    }
    if (blk.A.cols() != blk.n) {
      throw DimensionError(block_tag(i) + ": coupling matrix column count differs from dimension",
                           idx);
    }
    if (blk.A.rows() != m_c) {
      throw DimensionError(block_tag(i) + ": coupling matrix has " +
                               std::to_string(blk.A.rows()) + " rows, expected " +
                               std::to_string(m_c),
                           idx);
    }
    if (blk.lb.size() != 0 && blk.lb.size() != blk.n) {
      throw DimensionError(block_tag(i) + ": lower bound length mismatch", idx);
    }
    if (blk.ub.size() != 0 && blk.ub.size() != blk.n) {
      throw DimensionError(block_tag(i) + ": upper bound length mismatch", idx);
    }
    if (blk.lb.size() == blk.n && blk.ub.size() == blk.n && (blk.lb.array() > blk.ub.array()).any()) {
      throw DimensionError(block_tag(i) + ": lower bound exceeds upper bound", idx);
    }
    VectorField bounds = bound_rows(blk.n, blk.lb, blk.ub);
    if (!bounds.empty()) blk.h = VectorField::concat(blk.h, bounds);
    blk.lb.resize(0);
    blk.ub.resize(0);
  }
}

BlockVectors validated_initial(const std::vector<LocalBlock>& blocks, BlockVectors initial) {
  if (initial.empty()) {
    for (const auto& blk : blocks) initial.push_back(Vector::Zero(blk.n));
    return initial;
  }
  if (initial.size() != blocks.size()) {
    throw DimensionError("initial guess must hold one vector per block");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (initial[i].size() != blocks[i].n) {
      throw DimensionError(block_tag(i) + ": initial guess length mismatch", static_cast<int>(i));
    }
  }
  return initial;
}

void check_primal_shapes(const SeparableProblem& p, const BlockVectors& x) {
  if (x.size() != p.num_blocks()) {
    throw DimensionError("expected one primal vector per block");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != p.block(i).n) {
      throw DimensionError(block_tag(i) + ": primal vector length mismatch", static_cast<int>(i));
    }
  }
}

}  // namespace

LocalBlock LocalBlock::unconstrained(ScalarField f, Matrix A) {
  LocalBlock blk;
  blk.n = f.dim;
  blk.f = std::move(f);
  blk.g = VectorField::none(blk.n);
  blk.h = VectorField::none(blk.n);
  blk.A = std::move(A);
  return blk;
}

bool SeparableProblem::has_local_constraints() const noexcept {
  for (const auto& blk : blocks_) {
    if (!blk.g.empty() || !blk.h.empty()) return true;
  }
  return false;
}

SeparableProblem build_problem(std::vector<LocalBlock> blocks, Vector b, BlockVectors initial_guess) {
  if (blocks.empty()) throw DimensionError("a separable problem needs at least one block");
  normalize_and_validate(blocks, b.size());
  SeparableProblem p;
  p.initial_ = validated_initial(blocks, std::move(initial_guess));
  for (const auto& blk : blocks) p.total_dim_ += blk.n;
  p.blocks_ = std::move(blocks);
  p.b_ = std::move(b);
  return p;
}

SeparableProblem build_consensus_problem(std::vector<LocalBlock> blocks, BlockVectors initial_guess) {
  if (blocks.empty()) throw DimensionError("a consensus problem needs at least one block");
  const int d = blocks.front().n;
  const auto N = static_cast<Eigen::Index>(blocks.size());
  const Eigen::Index m_c = (N - 1) * d;
  for (Eigen::Index i = 0; i < N; ++i) {
    LocalBlock& blk = blocks[static_cast<std::size_t>(i)];
    if (blk.n != d) {
      throw DimensionError(block_tag(static_cast<std::size_t>(i)) +
                               ": consensus blocks must share one dimension",
                           static_cast<int>(i));
    }
    blk.A = Matrix::Zero(m_c, d);
    if (i == 0) {
      for (Eigen::Index r = 0; r < N - 1; ++r) blk.A.block(r * d, 0, d, d).setIdentity();
    } else {
      blk.A.block((i - 1) * d, 0, d, d) = -Matrix::Identity(d, d);
    }
  }
  SeparableProblem p = build_problem(std::move(blocks), Vector::Zero(m_c), std::move(initial_guess));
  p.consensus_dim_ = d;
  return p;
}

IterateState initial_state(const SeparableProblem& p) {
  IterateState s;
  s.x = p.initial_guess();
  s.z = p.initial_guess();
  s.lambda = Vector::Zero(p.coupling_rows());
  for (const auto& blk : p.blocks()) {
    s.gamma.push_back(Vector::Zero(blk.g.out_dim));
    s.mu.push_back(Vector::Zero(blk.h.out_dim));
  }
  return s;
}

Vector coupling_residual(const SeparableProblem& p, const BlockVectors& x) {
  check_primal_shapes(p, x);
  Vector r = -p.b();
  for (std::size_t i = 0; i < x.size(); ++i) r.noalias() += p.block(i).A * x[i];
  return r;
}

double total_objective(const SeparableProblem& p, const BlockVectors& x) {
  check_primal_shapes(p, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = p.block(i).f(x[i]);
    if (!std::isfinite(v)) {
      throw EvaluationError(block_tag(i) + ": non-finite objective value", static_cast<int>(i));
    }
    sum += v;
  }
  return sum;
}

double augmented_lagrangian(const SeparableProblem& p, const BlockVectors& x,
                            const Vector& lambda, double rho) {
  if (!(rho >= 0.0)) throw ConfigError("augmented_lagrangian: rho must be nonnegative");
  if (lambda.size() != p.coupling_rows()) {
    throw DimensionError("augmented_lagrangian: multiplier length must equal coupling rows");
  }
  const Vector r = coupling_residual(p, x);
  return total_objective(p, x) + lambda.dot(r) + 0.5 * rho * r.squaredNorm();
}

Vector stack(const BlockVectors& parts) {
  Eigen::Index n = 0;
  for (const auto& v : parts) n += v.size();
  Vector out(n);
  Eigen::Index off = 0;
  for (const auto& v : parts) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  return out;
}

BlockVectors split(const SeparableProblem& p, const Vector& stacked) {
  if (stacked.size() != p.total_dim()) throw DimensionError("split: stacked length mismatch");
  BlockVectors out;
  out.reserve(p.num_blocks());
  Eigen::Index off = 0;
  for (const auto& blk : p.blocks()) {
    out.push_back(stacked.segment(off, blk.n));
    off += blk.n;
  }
  return out;
}

namespace {

struct Layout {
  std::vector<Eigen::Index> offset;
  std::vector<Eigen::Index> size;
  Eigen::Index total = 0;
};

Layout primal_layout(const SeparableProblem& p) {
  Layout l;
  for (const auto& blk : p.blocks()) {
    l.offset.push_back(l.total);
    l.size.push_back(blk.n);
    l.total += blk.n;
  }
  return l;
}

/// Concatenation of per-block vector fields over the stacked variable.
VectorField stacked_field(const SeparableProblem& p, const Layout& l, bool equalities) {
  auto field = [equalities](const LocalBlock& blk) -> const VectorField& {
    return equalities ? blk.g : blk.h;
  };
  std::vector<Eigen::Index> row_offset;
  Eigen::Index rows = 0;
  for (const auto& blk : p.blocks()) {
    row_offset.push_back(rows);
    rows += field(blk).out_dim;
  }
  if (rows == 0) return VectorField::none(static_cast<int>(l.total));

  VectorField F;
  F.in_dim = static_cast<int>(l.total);
  F.out_dim = static_cast<int>(rows);
  const auto blocks = p.blocks();
  F.eval = [blocks, l, row_offset, rows, field](const Vector& x) {
    Vector out(rows);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const VectorField& Fi = field(blocks[i]);
      if (Fi.out_dim == 0) continue;
      out.segment(row_offset[i], Fi.out_dim) = Fi(x.segment(l.offset[i], l.size[i]));
    }
    return out;
  };
  F.jacobian = [blocks, l, row_offset, rows, field](const Vector& x) {
    Matrix J = Matrix::Zero(rows, l.total);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const VectorField& Fi = field(blocks[i]);
      if (Fi.out_dim == 0) continue;
      J.block(row_offset[i], l.offset[i], Fi.out_dim, l.size[i]) =
          jacobian_of(Fi, x.segment(l.offset[i], l.size[i]));
    }
    return J;
  };
  F.weighted_hessian = [blocks, l, row_offset, field](const Vector& x, const Vector& w) {
    Matrix H = Matrix::Zero(l.total, l.total);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const VectorField& Fi = field(blocks[i]);
      if (Fi.out_dim == 0) continue;
      H.block(l.offset[i], l.offset[i], l.size[i], l.size[i]) = weighted_hessian_of(
          Fi, x.segment(l.offset[i], l.size[i]), w.segment(row_offset[i], Fi.out_dim));
    }
    return H;
  };
  return F;
}

}  // namespace

LocalBlock stack_blocks(const SeparableProblem& p) {
  if (p.num_blocks() == 1) return p.block(0);
  const Layout l = primal_layout(p);
  const auto blocks = p.blocks();

  LocalBlock out;
  out.n = static_cast<int>(l.total);
  out.f.dim = out.n;
  out.f.eval = [blocks, l](const Vector& x) {
    double sum = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) sum += blocks[i].f(x.segment(l.offset[i], l.size[i]));
    return sum;
  };
  out.f.gradient = [blocks, l](const Vector& x) {
    Vector g(l.total);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      g.segment(l.offset[i], l.size[i]) = gradient_of(blocks[i].f, x.segment(l.offset[i], l.size[i]));
    }
    return g;
  };
  out.f.hessian = [blocks, l](const Vector& x) {
    Matrix H = Matrix::Zero(l.total, l.total);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      H.block(l.offset[i], l.offset[i], l.size[i], l.size[i]) =
          hessian_of(blocks[i].f, x.segment(l.offset[i], l.size[i]));
    }
    return H;
  };
  out.g = stacked_field(p, l, true);
  out.h = stacked_field(p, l, false);
  out.A.resize(p.coupling_rows(), l.total);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.A.middleCols(l.offset[i], l.size[i]) = blocks[i].A;
  }
  return out;
}

}  // namespace distopt
