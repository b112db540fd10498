#include "distopt/first_order.hpp"

#include "distopt/errors.hpp"
#include "distopt/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace distopt {

void SolverConfig::validate() const {
  if (!(rho >= 0.0)) throw ConfigError("rho must be nonnegative");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(tol_primal >= 0.0) || !(tol_dual >= 0.0)) throw ConfigError("tolerances must be nonnegative");
  if (!(inner_tol > 0.0)) throw ConfigError("inner_tol must be positive");
  if (!(prox_reg > 0.0)) throw ConfigError("prox_reg must be positive");
  if (oscillation_window < 2) throw ConfigError("oscillation_window must be at least 2");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Penalty term (rho / 2) |M x - v|^2; M == nullptr means the identity.
struct Penalty {
  const Matrix* M = nullptr;
  Vector v;
  double rho = 0.0;
};

/// argmin_x f(x) + linear^T x [+ penalty] subject to the block's local constraints.
LocalNlpResult inner_argmin(const LocalBlock& blk, const Vector& linear,
                            const std::optional<Penalty>& penalty, const Vector& x0,
                            const SolverConfig& cfg) {
  const int n = blk.n;
  ScalarField obj;
  obj.dim = n;
  obj.eval = [&](const Vector& x) {
    double v = blk.f(x) + linear.dot(x);
    if (penalty && penalty->rho > 0.0) {
      const Vector r = penalty->M ? Vector(*penalty->M * x - penalty->v) : Vector(x - penalty->v);
      v += 0.5 * penalty->rho * r.squaredNorm();
    }
    return v;
  };
  obj.gradient = [&](const Vector& x) {
    Vector g = gradient_of(blk.f, x) + linear;
    if (penalty && penalty->rho > 0.0) {
      if (penalty->M) {
        g += penalty->rho * penalty->M->transpose() * (*penalty->M * x - penalty->v);
      } else {
        g += penalty->rho * (x - penalty->v);
      }
    }
    return g;
  };
  obj.hessian = [&](const Vector& x) {
    Matrix H = hessian_of(blk.f, x);
    if (penalty && penalty->rho > 0.0) {
      if (penalty->M) {
        H += penalty->rho * penalty->M->transpose() * *penalty->M;
      } else {
        H.diagonal().array() += penalty->rho;
      }
    }
    return H;
  };

  LocalNlp nlp{obj, blk.g, blk.h};
  LocalNlpOptions opt;
  opt.tol = cfg.inner_tol;
  opt.hessian_delta = cfg.prox_reg;
  opt.line_search = true;
  opt.divergence_radius = cfg.divergence_radius;
  return solve_local_nlp(nlp, x0, opt);
}

bool inner_failed(const LocalNlpResult& r) { return r.status != LocalNlpStatus::converged; }

/// |grad f(x) + A^T lambda + Jg^T gamma + Jh^T mu|_2 for one block.
double block_stationarity_sq(const LocalBlock& blk, const Vector& x, const Vector& lambda,
                             const Vector& gamma, const Vector& mu) {
  Vector s = gradient_of(blk.f, x);
  if (blk.A.rows() > 0) s += blk.A.transpose() * lambda;
  if (blk.g.out_dim > 0) s += jacobian_of(blk.g, x).transpose() * gamma;
  if (blk.h.out_dim > 0) s += jacobian_of(blk.h, x).transpose() * mu;
  return s.squaredNorm();
}

double stationarity(const SeparableProblem& p, const IterateState& s) {
  double sq = 0.0;
  for (std::size_t i = 0; i < p.num_blocks(); ++i) {
    sq += block_stationarity_sq(p.block(i), s.x[i], s.lambda, s.gamma[i], s.mu[i]);
  }
  return std::sqrt(sq);
}

double step_between(const BlockVectors& a, const BlockVectors& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]).squaredNorm();
  return std::sqrt(sq);
}

double norm_of(const BlockVectors& a) {
  double sq = 0.0;
  for (const auto& v : a) sq += v.squaredNorm();
  return std::sqrt(sq);
}

IterateState starting_state(const SeparableProblem& p, const std::optional<IterateState>& start) {
  IterateState s = initial_state(p);
  if (!start) return s;
  if (start->x.size() == p.num_blocks()) {
    for (std::size_t i = 0; i < p.num_blocks(); ++i) {
      if (start->x[i].size() != p.block(i).n) {
        throw DimensionError("warm start: primal length mismatch", static_cast<int>(i));
      }
    }
    s.x = start->x;
    s.z = start->x;
  } else if (!start->x.empty()) {
    throw DimensionError("warm start: expected one primal vector per block");
  }
  if (start->lambda.size() == p.coupling_rows()) {
    s.lambda = start->lambda;
  } else if (start->lambda.size() != 0) {
    throw DimensionError("warm start: multiplier length mismatch");
  }
  return s;
}

bool converged_now(double primal, double dual, double step, double x_norm, const SolverConfig& cfg) {
  return primal <= cfg.tol_primal && dual <= cfg.tol_dual && step <= cfg.tol_dual * (1.0 + x_norm);
}

enum class DualMode { stacked, per_block };

/// Shared loop of dual ascent and dual decomposition. The stacked variant
/// minimizes over the whole problem as one block; the per-block variant
/// distributes the argmins through map_indexed.
SolveResult dual_gradient_loop(const SeparableProblem& p, const SolverConfig& cfg,
                               const std::optional<IterateState>& start, DualMode mode) {
  cfg.validate();
  const auto t0 = Clock::now();
  SolveResult out;
  IterateState s = starting_state(p, start);

  const bool stacked = mode == DualMode::stacked && p.num_blocks() > 1;
  const LocalBlock whole = stacked ? stack_blocks(p) : LocalBlock{};

  auto record = [&](int k, double objective, double primal, double dual, double step) {
    out.trace.append({k, objective, primal, dual, step, elapsed(t0)});
  };

  {
    const Vector r = coupling_residual(p, s.x);
    const double dual = stationarity(p, s);
    record(0, total_objective(p, s.x) + s.lambda.dot(r), r.norm(), dual, 0.0);
    if (r.norm() <= cfg.tol_primal && dual <= cfg.tol_dual) {
      out.status = SolveStatus::converged;
      out.state = std::move(s);
      return out;
    }
  }

  std::vector<double> residual_history;
  out.status = SolveStatus::max_iter;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const BlockVectors x_prev = s.x;
    bool diverged = false;

    if (stacked) {
      const Vector linear = whole.A.transpose() * s.lambda;
      const LocalNlpResult r = inner_argmin(whole, linear, std::nullopt, stack(s.x), cfg);
      diverged = inner_failed(r);
      s.x = split(p, r.x);
      // Multipliers of stacked constraints follow the block order of stack_blocks.
      Eigen::Index og = 0, oh = 0;
      for (std::size_t i = 0; i < p.num_blocks(); ++i) {
        const auto mg = p.block(i).g.out_dim;
        const auto mh = p.block(i).h.out_dim;
        s.gamma[i] = r.gamma.segment(og, mg);
        s.mu[i] = r.mu.segment(oh, mh);
        og += mg;
        oh += mh;
      }
    } else {
      auto results = map_indexed(
          p.num_blocks(),
          [&](std::size_t i) {
            const LocalBlock& blk = p.block(i);
            const Vector linear = blk.A.transpose() * s.lambda;
            return inner_argmin(blk, linear, std::nullopt, s.x[i], cfg);
          },
          cfg.mode);
      for (std::size_t i = 0; i < p.num_blocks(); ++i) {
        diverged |= inner_failed(results.results[i]);
        s.x[i] = results.results[i].x;
        s.gamma[i] = results.results[i].gamma;
        s.mu[i] = results.results[i].mu;
      }
    }

    const Vector r = coupling_residual(p, s.x);
    double dual_value = std::numeric_limits<double>::quiet_NaN();
    if (!diverged) dual_value = total_objective(p, s.x) + s.lambda.dot(r);
    s.lambda += cfg.alpha * r;
    s.z = s.x;

    const double primal = r.norm();
    const double dual = diverged ? std::numeric_limits<double>::infinity() : stationarity(p, s);
    const double step = step_between(s.x, x_prev);
    record(k, dual_value, primal, dual, step);

    if (diverged || !std::isfinite(primal)) {
      out.status = SolveStatus::diverged;
      break;
    }
    if (converged_now(primal, dual, step, norm_of(x_prev), cfg)) {
      out.status = SolveStatus::converged;
      break;
    }
    if (mode == DualMode::per_block) {
      residual_history.push_back(primal);
      const auto w = static_cast<std::size_t>(cfg.oscillation_window);
      if (residual_history.size() > w) {
        const double anchor = residual_history[residual_history.size() - 1 - w];
        const auto first = residual_history.end() - static_cast<std::ptrdiff_t>(w);
        const double best = *std::min_element(first, residual_history.end());
        const bool stuck = best >= anchor;
        const bool above = std::all_of(first, residual_history.end(),
                                       [&](double v) { return v > 10.0 * cfg.tol_primal; });
        if (stuck && above) {
          out.status = SolveStatus::oscillating;
          break;
        }
      }
    }
  }
  out.state = std::move(s);
  return out;
}

}  // namespace

SolveResult dual_ascent(const SeparableProblem& p, const SolverConfig& cfg,
                        const std::optional<IterateState>& start) {
  return dual_gradient_loop(p, cfg, start, DualMode::stacked);
}

SolveResult dual_decomposition(const SeparableProblem& p, const SolverConfig& cfg,
                               const std::optional<IterateState>& start) {
  return dual_gradient_loop(p, cfg, start, DualMode::per_block);
}

SolveResult method_of_multipliers(const SeparableProblem& p, const SolverConfig& cfg,
                                  const std::optional<IterateState>& start) {
  cfg.validate();
  if (!(cfg.rho > 0.0)) throw ConfigError("method_of_multipliers: rho must be positive");
  const auto t0 = Clock::now();
  SolveResult out;
  IterateState s = starting_state(p, start);
  const LocalBlock whole = stack_blocks(p);

  {
    const Vector r = coupling_residual(p, s.x);
    const double dual = stationarity(p, s);
    out.trace.append({0, total_objective(p, s.x), r.norm(), dual, 0.0, elapsed(t0)});
    if (r.norm() <= cfg.tol_primal && dual <= cfg.tol_dual) {
      out.status = SolveStatus::converged;
      out.state = std::move(s);
      return out;
    }
  }

  out.status = SolveStatus::max_iter;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const BlockVectors x_prev = s.x;
    const Vector linear = whole.A.transpose() * s.lambda;
    const LocalNlpResult inner =
        inner_argmin(whole, linear, Penalty{&whole.A, p.b(), cfg.rho}, stack(s.x), cfg);
    s.x = split(p, inner.x);
    Eigen::Index og = 0, oh = 0;
    for (std::size_t i = 0; i < p.num_blocks(); ++i) {
      const auto mg = p.block(i).g.out_dim;
      const auto mh = p.block(i).h.out_dim;
      s.gamma[i] = inner.gamma.segment(og, mg);
      s.mu[i] = inner.mu.segment(oh, mh);
      og += mg;
      oh += mh;
    }
    const Vector r = coupling_residual(p, s.x);
    s.lambda += cfg.rho * r;
    s.z = s.x;

    const bool failed = inner_failed(inner);
    const double primal = r.norm();
    const double dual = failed ? std::numeric_limits<double>::infinity() : stationarity(p, s);
    const double step = step_between(s.x, x_prev);
    out.trace.append({k, failed ? std::numeric_limits<double>::quiet_NaN() : total_objective(p, s.x),
                      primal, dual, step, elapsed(t0)});
    if (failed || !std::isfinite(primal)) {
      out.status = SolveStatus::diverged;
      break;
    }
    if (converged_now(primal, dual, step, norm_of(x_prev), cfg)) {
      out.status = SolveStatus::converged;
      break;
    }
  }
  out.state = std::move(s);
  return out;
}

SolveResult admm_two_block(const ScalarField& f, const ScalarField& g, const Matrix& A,
                           const Matrix& B, const Vector& c, const SolverConfig& cfg) {
  cfg.validate();
  if (!(cfg.rho > 0.0)) throw ConfigError("admm_two_block: rho must be positive");
  if (A.rows() != c.size() || B.rows() != c.size()) {
    throw DimensionError("admm_two_block: A and B must have as many rows as c");
  }
  if (A.cols() != f.dim || B.cols() != g.dim) {
    throw DimensionError("admm_two_block: A / B columns must match f / g dimensions");
  }
  const auto t0 = Clock::now();
  const LocalBlock fb = LocalBlock::unconstrained(f, A);
  const LocalBlock gb = LocalBlock::unconstrained(g, B);

  Vector x = Vector::Zero(f.dim);
  Vector z = Vector::Zero(g.dim);
  Vector y = Vector::Zero(c.size());

  SolveResult out;
  {
    const Vector r = A * x + B * z - c;
    out.trace.append({0, f(x) + g(z), r.norm(), 0.0, 0.0, elapsed(t0)});
  }
  out.status = SolveStatus::max_iter;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Vector x_prev = x;
    const Vector z_prev = z;

    const LocalNlpResult rx =
        inner_argmin(fb, A.transpose() * y, Penalty{&A, Vector(c - B * z), cfg.rho}, x, cfg);
    x = rx.x;
    const LocalNlpResult rz =
        inner_argmin(gb, B.transpose() * y, Penalty{&B, Vector(c - A * x), cfg.rho}, z, cfg);
    z = rz.x;
    const Vector r = A * x + B * z - c;
    y += cfg.rho * r;

    const bool failed = inner_failed(rx) || inner_failed(rz);
    const double primal = r.norm();
    const double dual = cfg.rho * (A.transpose() * (B * (z - z_prev))).norm();
    const double step = std::hypot((x - x_prev).norm(), (z - z_prev).norm());
    out.trace.append({k, f(x) + g(z), primal, dual, step, elapsed(t0)});
    if (failed || !std::isfinite(primal)) {
      out.status = SolveStatus::diverged;
      break;
    }
    if (primal <= cfg.tol_primal && dual <= cfg.tol_dual) {
      out.status = SolveStatus::converged;
      break;
    }
  }
  out.state.x = {x, z};
  out.state.z = {z};
  out.state.lambda = y;
  return out;
}

SolveResult consensus_admm(const SeparableProblem& p, const SolverConfig& cfg) {
  cfg.validate();
  if (!(cfg.rho > 0.0)) throw ConfigError("consensus_admm: rho must be positive");
  if (!p.consensus_dim()) {
    throw ConfigError("consensus_admm: problem is not in consensus form (use build_consensus_problem)");
  }
  const auto t0 = Clock::now();
  const std::size_t N = p.num_blocks();
  const int d = *p.consensus_dim();

  IterateState s = initial_state(p);
  Vector z = Vector::Zero(d);
  for (const auto& xi : s.x) z += xi;
  z /= static_cast<double>(N);
  BlockVectors y(N, Vector::Zero(d));

  auto consensus_residual = [&](const BlockVectors& x, const Vector& zc) {
    double sq = 0.0;
    for (const auto& xi : x) sq += (xi - zc).squaredNorm();
    return std::sqrt(sq);
  };

  SolveResult out;
  out.trace.append({0, total_objective(p, s.x), consensus_residual(s.x, z), 0.0, 0.0, elapsed(t0)});
  out.status = SolveStatus::max_iter;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const BlockVectors x_prev = s.x;
    const Vector z_prev = z;

    auto batch = map_indexed(
        N,
        [&](std::size_t i) {
          return inner_argmin(p.block(i), y[i], Penalty{nullptr, z, cfg.rho}, s.x[i], cfg);
        },
        cfg.mode);
    bool failed = false;
    for (std::size_t i = 0; i < N; ++i) {
      failed |= inner_failed(batch.results[i]);
      s.x[i] = batch.results[i].x;
      s.gamma[i] = batch.results[i].gamma;
      s.mu[i] = batch.results[i].mu;
    }

    z.setZero();
    for (std::size_t i = 0; i < N; ++i) z += s.x[i] + y[i] / cfg.rho;
    z /= static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i) y[i] += cfg.rho * (s.x[i] - z);

    const double primal = consensus_residual(s.x, z);
    const double dual = cfg.rho * std::sqrt(static_cast<double>(N)) * (z - z_prev).norm();
    const double step = step_between(s.x, x_prev);
    out.trace.append({k, failed ? std::numeric_limits<double>::quiet_NaN() : total_objective(p, s.x),
                      primal, dual, step, elapsed(t0)});
    if (failed || !std::isfinite(primal)) {
      out.status = SolveStatus::diverged;
      break;
    }
    if (primal <= cfg.tol_primal && dual <= cfg.tol_dual) {
      out.status = SolveStatus::converged;
      break;
    }
  }
  s.z.assign(N, z);
  s.lambda = Vector::Zero(p.coupling_rows());
  for (std::size_t i = 1; i < N; ++i) {
    s.lambda.segment(static_cast<Eigen::Index>(i - 1) * d, d) = -y[i];
  }
  out.state = std::move(s);
  return out;
}

DualityGap duality_gap_estimate(const SeparableProblem& p, const BlockVectors& x,
                                const Vector& lambda, const SolverConfig& cfg) {
  cfg.validate();
  if (lambda.size() != p.coupling_rows()) {
    throw DimensionError("duality_gap_estimate: multiplier length mismatch");
  }
  const Vector r = coupling_residual(p, x);
  if (r.norm() > std::max(cfg.tol_primal, 1e-12)) {
    throw ConfigError("duality_gap_estimate: x is not primal feasible");
  }
  const double primal_value = total_objective(p, x);

  DualityGap out;
  double dual_value = -lambda.dot(p.b());
  for (std::size_t i = 0; i < p.num_blocks(); ++i) {
    const LocalBlock& blk = p.block(i);
    const Vector linear = blk.A.transpose() * lambda;
    const LocalNlpResult res = inner_argmin(blk, linear, std::nullopt, x[i], cfg);
    if (inner_failed(res)) {
      out.diverged = true;
      out.dual_value = -std::numeric_limits<double>::infinity();
      out.gap = std::numeric_limits<double>::infinity();
      return out;
    }
    dual_value += blk.f(res.x) + linear.dot(res.x);
  }
  out.dual_value = dual_value;
  out.gap = primal_value - dual_value;
  return out;
}

}  // namespace distopt
