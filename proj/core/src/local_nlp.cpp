#include "distopt/errors.hpp"
#include "distopt/kkt.hpp"
#include "distopt/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace distopt {

namespace {

struct Linearization {
  Vector grad;
  Vector g;
  Matrix Jg;
  Vector h;
  Matrix Jh;
};

Linearization linearize(const LocalNlp& nlp, const Vector& x) {
  Linearization lin;
  lin.grad = gradient_of(nlp.objective, x);
  lin.g = nlp.equalities.out_dim ? nlp.equalities(x) : Vector(0);
  lin.Jg = jacobian_of(nlp.equalities, x);
  lin.h = nlp.inequalities.out_dim ? nlp.inequalities(x) : Vector(0);
  lin.Jh = jacobian_of(nlp.inequalities, x);
  return lin;
}

Vector masked(const Vector& mu, const ActiveSet& W) {
  Vector out = Vector::Zero(mu.size());
  for (int j : W.indices) out[j] = mu[j];
  return out;
}

void insert(ActiveSet& W, int j) {
  W.indices.insert(std::lower_bound(W.indices.begin(), W.indices.end(), j), j);
}

void erase(ActiveSet& W, int j) {
  W.indices.erase(std::lower_bound(W.indices.begin(), W.indices.end(), j));
}

}  // namespace

LocalNlpResult solve_local_nlp(const LocalNlp& nlp, const Vector& x0, const LocalNlpOptions& opt) {
  const int n = nlp.objective.dim;
  if (x0.size() != n) throw DimensionError("solve_local_nlp: start length differs from dimension");
  if (nlp.equalities.out_dim > 0 && nlp.equalities.in_dim != n) {
    throw DimensionError("solve_local_nlp: equality input dimension mismatch");
  }
  if (nlp.inequalities.out_dim > 0 && nlp.inequalities.in_dim != n) {
    throw DimensionError("solve_local_nlp: inequality input dimension mismatch");
  }

  const int m_g = nlp.equalities.out_dim;
  const int m_h = nlp.inequalities.out_dim;

  LocalNlpResult res;
  res.x = x0;
  res.gamma = Vector::Zero(m_g);
  res.mu = Vector::Zero(m_h);
  res.working_set = detect_active_set(nlp.inequalities, x0, opt.eps_act);

  auto finish = [&](LocalNlpStatus status) {
    res.status = status;
    res.active = detect_active_set(nlp.inequalities, res.x, opt.eps_act);
    return res;
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    const Linearization lin = linearize(nlp, res.x);
    ActiveSet& W = res.working_set;
    const Matrix JW = select_rows(lin.Jh, W);
    const Vector hW = select_rows(lin.h, W);
    const Vector muW = select_rows(res.mu, W);

    const Vector stationarity = lin.grad + lin.Jg.transpose() * res.gamma + JW.transpose() * muW;
    const double feas = std::sqrt(lin.g.squaredNorm() + hW.squaredNorm());
    res.kkt_norm = std::hypot(stationarity.norm(), feas);
    const bool kkt_ok = stationarity.norm() <= opt.tol * (1.0 + lin.grad.norm()) &&
                        feas <= opt.tol * (1.0 + res.x.norm());

    if (kkt_ok) {
      int worst = -1;
      double worst_val = opt.feas_tol;
      for (int j = 0; j < m_h; ++j) {
        if (!W.contains(j) && lin.h[j] > worst_val) {
          worst = j;
          worst_val = lin.h[j];
        }
      }
      if (worst >= 0) {
        insert(W, worst);
        continue;
      }
      int most_negative = -1;
      double neg_val = -opt.mult_tol;
      for (int j : W.indices) {
        if (res.mu[j] < neg_val) {
          most_negative = j;
          neg_val = res.mu[j];
        }
      }
      if (most_negative >= 0) {
        res.mu[most_negative] = 0.0;
        erase(W, most_negative);
        continue;
      }
      return finish(LocalNlpStatus::converged);
    }

    Matrix H = hessian_of(nlp.objective, res.x);
    if (m_g > 0) H += weighted_hessian_of(nlp.equalities, res.x, res.gamma);
    if (!W.empty()) H += weighted_hessian_of(nlp.inequalities, res.x, masked(res.mu, W));
    H = 0.5 * (H + H.transpose());

    Matrix J(m_g + JW.rows(), n);
    J << lin.Jg, JW;
    Vector c(m_g + hW.size());
    c << lin.g, hW;

    if (!tangent_curvature_positive(H, J)) H = regularize_spd(H, opt.hessian_delta);

    KktSystem sys{std::move(H), J, -lin.grad, -c};
    const KktSolution sol = solve_kkt(sys);
    // H p - J^T l = -grad  <=>  grad + J^T (-l) + H p = 0, so the multipliers are -l.
    const Vector multipliers = -sol.p_lambda;

    double t = 1.0;
    if (opt.line_search && J.rows() == 0) {
      const double slope = lin.grad.dot(sol.p);
      const double f0 = nlp.objective(res.x);
      // A predicted decrease below the objective's rounding level cannot be
      // certified by Armijo, so the full Newton step is taken.
      const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
      if (slope < -noise) {
        while (t > 1e-12 && !(nlp.objective(res.x + t * sol.p) <= f0 + 1e-4 * t * slope)) t *= 0.5;
      }
    }
    const Vector trial = res.x + t * sol.p;

    if (m_h > 0) {
      const Vector h_trial = nlp.inequalities(trial);
      int blocking = -1;
      double blocking_val = opt.feas_tol;
      for (int j = 0; j < m_h; ++j) {
        if (!W.contains(j) && h_trial[j] > blocking_val) {
          blocking = j;
          blocking_val = h_trial[j];
        }
      }
      if (blocking >= 0) {
        insert(W, blocking);
        continue;
      }
    }

    const double step_size = (trial - res.x).lpNorm<Eigen::Infinity>();
    res.x = trial;
    res.gamma = multipliers.head(m_g);
    const Vector new_muW = multipliers.tail(static_cast<Eigen::Index>(W.size()));
    for (std::size_t r = 0; r < W.size(); ++r) res.mu[W.indices[r]] = new_muW[static_cast<Eigen::Index>(r)];

    if (!res.x.allFinite() || res.x.lpNorm<Eigen::Infinity>() > opt.divergence_radius) {
      return finish(LocalNlpStatus::diverged);
    }
    // Steps at roundoff level: the KKT test is limited by evaluation noise.
    if (step_size <= 1e-15 * (1.0 + res.x.lpNorm<Eigen::Infinity>()) && res.kkt_norm <= 1e-6) {
      const Linearization after = linearize(nlp, res.x);
      bool violated = false;
      for (int j = 0; j < m_h; ++j) violated |= !W.contains(j) && after.h[j] > opt.feas_tol;
      bool negative = false;
      for (int j : W.indices) negative |= res.mu[j] < -opt.mult_tol;
      if (!violated && !negative) return finish(LocalNlpStatus::converged);
    }
  }
  res.iterations = opt.max_iter;
  return finish(LocalNlpStatus::max_iter);
}

}  // namespace distopt
