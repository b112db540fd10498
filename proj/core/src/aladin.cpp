#include "distopt/aladin.hpp"

#include "distopt/errors.hpp"
#include "distopt/kkt.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <string>

namespace distopt {

std::optional<HessianMode> parse_hessian_mode(std::string_view text) {
  if (text == "exact-fd" || text == "exact_fd") return HessianMode::exact_fd;
  if (text == "analytic") return HessianMode::analytic;
  if (text == "regularized") return HessianMode::regularized;
  return std::nullopt;
}

std::string_view to_string(HessianMode mode) {
  switch (mode) {
    case HessianMode::exact_fd: return "exact-fd";
    case HessianMode::analytic: return "analytic";
    case HessianMode::regularized: return "regularized";
  }
  return "analytic";
}

void AladinConfig::validate(const SeparableProblem& p) const {
  if (!(rho > 0.0)) throw ConfigError("aladin: rho must be positive");
  if (!(nu > 0.0)) throw ConfigError("aladin: nu must be positive");
  if (alpha && !(*alpha > 0.0)) throw ConfigError("aladin: alpha must be positive");
  if (max_iter < 1) throw ConfigError("aladin: max_iter must be at least 1");
  if (!(tol_primal >= 0.0) || !(tol_dual >= 0.0)) throw ConfigError("aladin: tolerances must be nonnegative");
  if (!(eps_act >= 0.0)) throw ConfigError("aladin: eps_act must be nonnegative");
  if (!(inner_tol > 0.0) || inner_max_iter < 1) throw ConfigError("aladin: invalid inner solver settings");
  if (sigma.empty()) return;
  if (sigma.size() != p.num_blocks()) throw ConfigError("aladin: need one sigma matrix per block");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const int n = p.block(i).n;
    if (sigma[i].rows() != n || sigma[i].cols() != n) {
      throw ConfigError("aladin: sigma of block " + std::to_string(i) + " has wrong shape");
    }
    if (!is_positive_semidefinite(sigma[i]) || !(min_eigenvalue(sigma[i]) > 0.0)) {
      throw ConfigError("aladin: sigma of block " + std::to_string(i) + " is not positive definite");
    }
  }
}

LocalStepResult local_step(const LocalBlock& block, const Vector& lambda, const Vector& z,
                           const Matrix& sigma, const AladinConfig& cfg) {
  const int n = block.n;
  if (z.size() != n) throw DimensionError("local_step: z length differs from block dimension");
  if (lambda.size() != block.A.rows()) throw DimensionError("local_step: lambda length mismatch");
  const bool identity = sigma.size() == 0;
  if (!identity && (sigma.rows() != n || sigma.cols() != n)) {
    throw DimensionError("local_step: sigma shape mismatch");
  }
  const Vector linear = block.A.transpose() * lambda;
  const double nu = cfg.nu;

  ScalarField obj;
  obj.dim = n;
  obj.eval = [&](const Vector& x) {
    const Vector d = x - z;
    const double prox = identity ? d.squaredNorm() : d.dot(sigma * d);
    return block.f(x) + linear.dot(x) + 0.5 * nu * prox;
  };
  obj.gradient = [&](const Vector& x) {
    const Vector d = x - z;
    return Vector(gradient_of(block.f, x) + linear + nu * (identity ? d : Vector(sigma * d)));
  };
  obj.hessian = [&](const Vector& x) {
    Matrix H = hessian_of(block.f, x);
    if (identity) {
      H.diagonal().array() += nu;
    } else {
      H += nu * sigma;
    }
    return H;
  };

  LocalNlpOptions opt;
  opt.tol = cfg.inner_tol;
  opt.max_iter = cfg.inner_max_iter;
  opt.eps_act = cfg.eps_act;
  opt.hessian_delta = 1e-6;
  const LocalNlpResult r = solve_local_nlp(LocalNlp{obj, block.g, block.h}, z, opt);

  LocalStepResult out;
  out.x = r.x;
  out.gamma = r.gamma;
  out.mu = r.mu;
  out.active = r.active;
  out.status = r.status;
  out.kkt_norm = r.kkt_norm;
  return out;
}

Matrix hessian_approx(const LocalBlock& block, const Vector& x, const Vector& gamma,
                      const Vector& mu, const AladinConfig& cfg) {
  if (gamma.size() != block.g.out_dim || mu.size() != block.h.out_dim) {
    throw DimensionError("hessian_approx: multiplier lengths differ from constraint counts");
  }
  Matrix H;
  if (cfg.hessian_mode == HessianMode::exact_fd) {
    ScalarField lag;
    lag.dim = block.n;
    lag.eval = [&](const Vector& v) {
      double val = block.f(v);
      if (block.g.out_dim > 0) val += gamma.dot(block.g(v));
      if (block.h.out_dim > 0) val += mu.dot(block.h(v));
      return val;
    };
    H = fd_hessian(lag, x);
  } else {
    H = hessian_of(block.f, x);
    if (block.g.out_dim > 0) H += weighted_hessian_of(block.g, x, gamma);
    if (block.h.out_dim > 0) H += weighted_hessian_of(block.h, x, mu);
  }
  H = 0.5 * (H + H.transpose());
  if (cfg.hessian_mode == HessianMode::regularized || min_eigenvalue(H) < kAladinHessianFloor) {
    H = regularize_spd(H, kAladinHessianFloor);
  }
  return H;
}

namespace {

/// Drops linearly dependent rows of C d = -c; throws when they contradict.
void reduce_rows(Matrix& C, Vector& c, int block) {
  if (C.rows() == 0) return;
  const int rank = row_rank(C);
  if (rank == C.rows()) return;
  const Eigen::ColPivHouseholderQR<Matrix> lsq(C);
  const Vector d = lsq.solve(Vector(-c));
  const double mismatch = (C * d + c).norm();
  if (mismatch > 1e-8 * (1.0 + c.norm())) {
    throw CoordinationInfeasibleError(
        "coordination QP: linearized constraints of block " + std::to_string(block) + " are inconsistent",
        block);
  }
  Eigen::ColPivHouseholderQR<Matrix> rows(C.transpose());
  rows.setThreshold(1e-10);
  const auto& perm = rows.colsPermutation().indices();
  Matrix Cr(rank, C.cols());
  Vector cr(rank);
  for (int k = 0; k < rank; ++k) {
    Cr.row(k) = C.row(perm[k]);
    cr[k] = c[perm[k]];
  }
  C = std::move(Cr);
  c = std::move(cr);
}

}  // namespace

CoordinationStep coordination_step(const CoordinationQp& qp) {
  const std::size_t N = qp.B.size();
  if (qp.grad.size() != N || qp.C.size() != N || qp.c.size() != N || qp.x.size() != N || qp.A.size() != N) {
    throw DimensionError("coordination_step: per-block fields must have equal length");
  }
  if (!(qp.rho >= 0.0)) throw ConfigError("coordination_step: rho must be nonnegative");
  const Eigen::Index m = qp.b.size();
  if (qp.lambda.size() != m) throw DimensionError("coordination_step: lambda length mismatch");

  std::vector<Eigen::Index> offset(N + 1, 0);
  std::vector<Matrix> C = qp.C;
  BlockVectors c = qp.c;
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::Index n = qp.B[i].rows();
    const int blk = static_cast<int>(i);
    if (qp.B[i].cols() != n || qp.grad[i].size() != n || qp.x[i].size() != n) {
      throw DimensionError("coordination_step: inconsistent block dimensions", blk);
    }
    if (qp.A[i].rows() != m || qp.A[i].cols() != n) {
      throw DimensionError("coordination_step: coupling matrix shape mismatch", blk);
    }
    if (C[i].rows() != c[i].size() || (C[i].rows() > 0 && C[i].cols() != n)) {
      throw DimensionError("coordination_step: constraint Jacobian shape mismatch", blk);
    }
    if (C[i].rows() == 0) C[i].resize(0, n);
    reduce_rows(C[i], c[i], blk);
    offset[i + 1] = offset[i] + n;
    rows += C[i].rows();
  }
  const Eigen::Index total = offset[N];

  Matrix Acat(m, total);
  Vector r0 = -qp.b;
  for (std::size_t i = 0; i < N; ++i) {
    Acat.middleCols(offset[i], qp.A[i].cols()) = qp.A[i];
    const Vector t = qp.A[i] * qp.x[i];
    r0 += t;
  }

  Matrix H = qp.rho * Acat.transpose() * Acat;
  Vector q(total);
  Matrix J = Matrix::Zero(rows, total);
  Vector rhs_bottom(rows);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::Index n = qp.B[i].rows();
    H.block(offset[i], offset[i], n, n) += qp.B[i];
    q.segment(offset[i], n) = qp.grad[i];
    J.block(row, offset[i], C[i].rows(), n) = C[i];
    rhs_bottom.segment(row, C[i].rows()) = -c[i];
    row += C[i].rows();
  }
  q += Acat.transpose() * (qp.lambda + qp.rho * r0);

  const KktSolution sol = solve_kkt(KktSystem{H, J, -q, rhs_bottom});

  CoordinationStep out;
  out.delta_x.resize(N);
  for (std::size_t i = 0; i < N; ++i) out.delta_x[i] = sol.p.segment(offset[i], qp.B[i].rows());
  out.lambda_qp = qp.lambda + qp.rho * (r0 + Acat * sol.p);
  return out;
}

CoordinationQp build_coordination_qp(const SeparableProblem& p,
                                     const std::vector<LocalStepResult>& local,
                                     const Vector& lambda, const AladinConfig& cfg) {
  const std::size_t N = p.num_blocks();
  if (local.size() != N) throw DimensionError("build_coordination_qp: one local result per block expected");
  CoordinationQp qp;
  qp.b = p.b();
  qp.lambda = lambda;
  qp.rho = cfg.rho;
  for (std::size_t i = 0; i < N; ++i) {
    const LocalBlock& blk = p.block(i);
    const LocalStepResult& r = local[i];
    qp.B.push_back(hessian_approx(blk, r.x, r.gamma, r.mu, cfg));
    qp.grad.push_back(gradient_of(blk.f, r.x));
    const Matrix Jg = jacobian_of(blk.g, r.x);
    const Matrix Jh = select_rows(jacobian_of(blk.h, r.x), r.active);
    const Vector gv = blk.g.out_dim > 0 ? blk.g(r.x) : Vector(0);
    const Vector hv = blk.h.out_dim > 0 ? select_rows(Vector(blk.h(r.x)), r.active) : Vector(0);
    Matrix C(Jg.rows() + Jh.rows(), blk.n);
    C << Jg, Jh;
    Vector c(gv.size() + hv.size());
    c << gv, hv;
    qp.C.push_back(std::move(C));
    qp.c.push_back(std::move(c));
    qp.x.push_back(r.x);
    qp.A.push_back(blk.A);
  }
  return qp;
}

Vector dual_update(const Vector& lambda, double alpha, const Vector& residual_next) {
  if (!(alpha > 0.0)) throw ConfigError("dual_update: alpha must be positive");
  if (lambda.size() != residual_next.size()) throw DimensionError("dual_update: length mismatch");
  return lambda + alpha * residual_next;
}

SolveResult run_aladin(const SeparableProblem& p, const AladinConfig& cfg,
                       const std::optional<IterateState>& start) {
  cfg.validate(p);
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  const std::size_t N = p.num_blocks();
  IterateState s = initial_state(p);
  if (start) {
    if (start->x.size() == N) {
      for (std::size_t i = 0; i < N; ++i) {
        if (start->x[i].size() != p.block(i).n) {
          throw DimensionError("run_aladin: warm start length mismatch", static_cast<int>(i));
        }
      }
      s.x = start->x;
      s.z = start->x;
    }
    if (start->lambda.size() == p.coupling_rows()) s.lambda = start->lambda;
  }

  SolveResult out;
  out.trace.append({0, total_objective(p, s.x), coupling_residual(p, s.x).norm(), 0.0, 0.0, seconds()});
  out.status = SolveStatus::max_iter;

  const Matrix no_sigma;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const IterateState& snap = s;
    auto batch = map_indexed(
        N,
        [&](std::size_t i) {
          const Matrix& sig = cfg.sigma.empty() ? no_sigma : cfg.sigma[i];
          return local_step(p.block(i), snap.lambda, snap.z[i], sig, cfg);
        },
        cfg.mode);
    std::vector<LocalStepResult>& local = batch.results;
    for (std::size_t i = 0; i < N; ++i) {
      if (local[i].status != LocalNlpStatus::converged) {
        throw BlockFailureError("aladin: local step of block " + std::to_string(i) + " failed at iteration " +
                                    std::to_string(k),
                                static_cast<int>(i), k, out.trace);
      }
    }

    CoordinationStep step;
    try {
      step = coordination_step(build_coordination_qp(p, local, s.lambda, cfg));
    } catch (const CoordinationInfeasibleError&) {
      throw;
    } catch (const SingularKktError& e) {
      throw SolverFailure(std::string("aladin: coordination QP failed at iteration ") + std::to_string(k) +
                              ": " + e.what(),
                          k, out.trace);
    }

    double dual_sq = 0.0;
    double step_sq = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      dual_sq += (local[i].x - s.z[i]).squaredNorm();
      step_sq += step.delta_x[i].squaredNorm();
      s.x[i] = local[i].x + step.delta_x[i];
      s.z[i] = s.x[i];
      s.gamma[i] = local[i].gamma;
      s.mu[i] = local[i].mu;
    }
    const Vector r = coupling_residual(p, s.x);
    s.lambda = dual_update(s.lambda, cfg.dual_step(), r);

    std::vector<ActiveSet> active(N);
    for (std::size_t i = 0; i < N; ++i) active[i] = local[i].active;
    out.active_sets.push_back(std::move(active));

    const double primal = r.norm();
    const double dual = std::sqrt(dual_sq);
    out.trace.append({k, total_objective(p, s.x), primal, dual, std::sqrt(step_sq), seconds()});
    if (!std::isfinite(primal) || !std::isfinite(dual)) {
      out.status = SolveStatus::diverged;
      break;
    }
    if (primal <= cfg.tol_primal && dual <= cfg.tol_dual) {
      out.status = SolveStatus::converged;
      break;
    }
  }
  out.state = std::move(s);
  return out;
}

}  // namespace distopt
