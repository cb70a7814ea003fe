#pragma once

// Dense primal-dual interior-point solver for smooth constrained NLPs:
//
//   min f(x)   s.t.  c_E(x) = 0,  c_I(x) <= 0,  lo <= x <= hi
//
// Inequalities receive slacks (c_I + s = 0, s >= 0), bounds enter the
// barrier directly. The Newton KKT system is reduced to the (x, lambda)
// block and factorized with the Bunch-Kaufman LDL^T; wrong inertia is
// repaired by adding delta*I to the Hessian block, starting at 1e-8 and
// multiplying by 10. The barrier parameter follows the monotone schedule
// mu <- max(mu/10, tol/10).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "gridres/linalg.hpp"

namespace gridres {

struct NlpProblem {
  int n_vars = 0;
  std::function<double(const Vec&)> objective;
  std::function<Vec(const Vec&)> objective_gradient;

  int n_eq = 0;
  std::function<Vec(const Vec&)> eq_constraints;        // must equal 0
  std::function<Matrix(const Vec&)> eq_jacobian;        // n_eq x n_vars

  int n_ineq = 0;
  std::function<Vec(const Vec&)> ineq_constraints;      // must be <= 0
  std::function<Matrix(const Vec&)> ineq_jacobian;      // n_ineq x n_vars

  Vec lower;  // -inf allowed
  Vec upper;  // +inf allowed
  Vec initial_point;

  // Optional exact Hessian of the Lagrangian
  //   sigma * f(x) + lam_eq . c_E(x) + nu_ineq . c_I(x);
  // when absent a central finite difference of the Lagrangian gradient is used.
  std::function<Matrix(const Vec&, double, const Vec&, const Vec&)> lagrangian_hessian;
};

enum class NlpStatus { Converged, IterLimit, Infeasible };

inline const char* to_string(NlpStatus s) {
  switch (s) {
    case NlpStatus::Converged: return "Converged";
    case NlpStatus::IterLimit: return "IterLimit";
    case NlpStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

struct NlpSolution {
  Vec point;
  double objective_value = 0.0;
  double max_eq_violation = 0.0;
  double max_ineq_violation = 0.0;
  int iterations = 0;
  NlpStatus status = NlpStatus::IterLimit;
  double kkt_error = 0.0;
  Vec eq_multipliers;
  Vec ineq_multipliers;
};

struct NlpOptions {
  double tol = 1e-6;
  int max_iters = 200;
  double mu_init = 0.1;
  bool verbose = false;
};

// Central finite-difference gradient. Step h is scaled per-component by
// (1 + |x_i|).
inline Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& point,
                                double h = 1e-6) {
  Vec g(point.size());
  Vec x = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double hi = h * (1.0 + std::abs(point[i]));
    const double xi = point[i];
    x[i] = xi + hi;
    const double fp = f(x);
    x[i] = xi - hi;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

struct KktReport {
  double stationarity = 0.0;    // ||grad f - J_E^T lam + J_I^T nu||_inf
  double eq_feasibility = 0.0;  // ||c_E||_inf
  double ineq_feasibility = 0.0;  // max(0, c_I)
  double complementarity = 0.0;   // max |nu_i * c_I_i|
  double max_residual() const {
    return std::max({stationarity, eq_feasibility, ineq_feasibility, complementarity});
  }
};

// First-order KKT residuals at a candidate point. Multiplier convention:
// stationarity is grad f(x) - J_E^T lam + J_I^T nu with nu >= 0 for the
// inequality side (c_I <= 0).
inline KktReport check_kkt(const NlpProblem& p, const Vec& point, const Vec& eq_multipliers,
                           const Vec& ineq_multipliers) {
  if (static_cast<int>(point.size()) != p.n_vars)
    throw std::invalid_argument("check_kkt: point size mismatch");
  if (static_cast<int>(eq_multipliers.size()) != p.n_eq)
    throw std::invalid_argument("check_kkt: equality multiplier size mismatch");
  if (static_cast<int>(ineq_multipliers.size()) != p.n_ineq)
    throw std::invalid_argument("check_kkt: inequality multiplier size mismatch");

  KktReport rep;
  Vec grad = p.objective_gradient(point);
  if (p.n_eq > 0) {
    const Matrix je = p.eq_jacobian(point);
    const Vec jtl = je.apply_transposed(eq_multipliers);
    for (int i = 0; i < p.n_vars; ++i) grad[i] -= jtl[i];
    const Vec ce = p.eq_constraints(point);
    rep.eq_feasibility = inf_norm(ce);
  }
  if (p.n_ineq > 0) {
    const Matrix ji = p.ineq_jacobian(point);
    const Vec jtn = ji.apply_transposed(ineq_multipliers);
    for (int i = 0; i < p.n_vars; ++i) grad[i] += jtn[i];
    const Vec ci = p.ineq_constraints(point);
    for (int i = 0; i < p.n_ineq; ++i) {
      rep.ineq_feasibility = std::max(rep.ineq_feasibility, ci[i]);
      rep.complementarity = std::max(rep.complementarity, std::abs(ineq_multipliers[i] * ci[i]));
    }
  }
  rep.stationarity = inf_norm(grad);
  return rep;
}

namespace detail {

struct IpmWork {
  int n = 0, me = 0, mi = 0;
  Vec x, s, lam, nu, zl, zu;
  std::vector<bool> fixed;       // lo == hi
  std::vector<bool> has_lo, has_hi;

  double f = 0.0;
  Vec grad, ce, ci;
  Matrix je, ji;
};

inline void evaluate(const NlpProblem& p, IpmWork& w) {
  w.f = p.objective(w.x);
  w.grad = p.objective_gradient(w.x);
  if (w.me > 0) {
    w.ce = p.eq_constraints(w.x);
    w.je = p.eq_jacobian(w.x);
    if (static_cast<int>(w.ce.size()) != w.me || w.je.rows() != static_cast<std::size_t>(w.me) ||
        w.je.cols() != static_cast<std::size_t>(w.n))
      throw std::invalid_argument("solve_nlp: equality callback dimension mismatch");
  }
  if (w.mi > 0) {
    w.ci = p.ineq_constraints(w.x);
    w.ji = p.ineq_jacobian(w.x);
    if (static_cast<int>(w.ci.size()) != w.mi || w.ji.rows() != static_cast<std::size_t>(w.mi) ||
        w.ji.cols() != static_cast<std::size_t>(w.n))
      throw std::invalid_argument("solve_nlp: inequality callback dimension mismatch");
  }
}

// Hessian of sigma*f + lam.c_E + nu.c_I by central differences of its gradient.
inline Matrix fd_lagrangian_hessian(const NlpProblem& p, const Vec& x, const Vec& lam,
                                    const Vec& nu) {
  const int n = p.n_vars;
  auto lag_grad = [&](const Vec& v) {
    Vec g = p.objective_gradient(v);
    if (p.n_eq > 0) {
      const Vec t = p.eq_jacobian(v).apply_transposed(lam);
      for (int i = 0; i < n; ++i) g[i] += t[i];
    }
    if (p.n_ineq > 0) {
      const Vec t = p.ineq_jacobian(v).apply_transposed(nu);
      for (int i = 0; i < n; ++i) g[i] += t[i];
    }
    return g;
  };
  Matrix h(n, n, 0.0);
  Vec v = x;
  for (int j = 0; j < n; ++j) {
    const double hj = 1e-7 * (1.0 + std::abs(x[j]));
    const double xj = x[j];
    v[j] = xj + hj;
    Vec gp = lag_grad(v);
    v[j] = xj - hj;
    Vec gm = lag_grad(v);
    v[j] = xj;
    for (int i = 0; i < n; ++i) h(i, j) = (gp[i] - gm[i]) / (2.0 * hj);
  }
  // symmetrize
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      const double v2 = 0.5 * (h(i, j) + h(j, i));
      h(i, j) = v2;
      h(j, i) = v2;
    }
  return h;
}

}  // namespace detail

inline NlpSolution solve_nlp(const NlpProblem& p, const NlpOptions& opt = {}) {
  using detail::IpmWork;
  if (p.n_vars <= 0) throw std::invalid_argument("solve_nlp: n_vars must be positive");
  if (!p.objective || !p.objective_gradient)
    throw std::invalid_argument("solve_nlp: objective callbacks missing");
  if (p.n_eq > 0 && (!p.eq_constraints || !p.eq_jacobian))
    throw std::invalid_argument("solve_nlp: equality callbacks missing");
  if (p.n_ineq > 0 && (!p.ineq_constraints || !p.ineq_jacobian))
    throw std::invalid_argument("solve_nlp: inequality callbacks missing");
  if (static_cast<int>(p.initial_point.size()) != p.n_vars)
    throw std::invalid_argument("solve_nlp: initial point size mismatch");

  IpmWork w;
  w.n = p.n_vars;
  w.me = p.n_eq;
  w.mi = p.n_ineq;
  Vec lo = p.lower, hi = p.upper;
  if (lo.empty()) lo.assign(w.n, -kInf);
  if (hi.empty()) hi.assign(w.n, kInf);
  if (static_cast<int>(lo.size()) != w.n || static_cast<int>(hi.size()) != w.n)
    throw std::invalid_argument("solve_nlp: bound size mismatch");
  for (int i = 0; i < w.n; ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("solve_nlp: lower bound above upper bound");

  w.fixed.assign(w.n, false);
  w.has_lo.assign(w.n, false);
  w.has_hi.assign(w.n, false);
  for (int i = 0; i < w.n; ++i) {
    w.fixed[i] = (lo[i] == hi[i]);
    w.has_lo[i] = !w.fixed[i] && std::isfinite(lo[i]);
    w.has_hi[i] = !w.fixed[i] && std::isfinite(hi[i]);
  }

  // Relax bounds and inequalities by a whisker so that feasible sets with an
  // empty relative interior (e.g. a storage unit pinned at its energy floor)
  // still admit interior iterates. Violations stay below 1e-8.
  const double relax = 1e-9;
  for (int i = 0; i < w.n; ++i) {
    if (w.has_lo[i]) lo[i] -= relax * std::max(1.0, std::abs(lo[i]));
    if (w.has_hi[i]) hi[i] += relax * std::max(1.0, std::abs(hi[i]));
  }

  // Project the start into the interior of the box.
  w.x = p.initial_point;
  const double kappa = 1e-2;
  for (int i = 0; i < w.n; ++i) {
    if (w.fixed[i]) {
      w.x[i] = lo[i];
      continue;
    }
    double pl = w.has_lo[i] ? kappa * std::max(1.0, std::abs(lo[i])) : 0.0;
    double pu = w.has_hi[i] ? kappa * std::max(1.0, std::abs(hi[i])) : 0.0;
    if (w.has_lo[i] && w.has_hi[i]) {
      const double width = hi[i] - lo[i];
      pl = std::min(pl, kappa * width);
      pu = std::min(pu, kappa * width);
    }
    if (w.has_lo[i]) w.x[i] = std::max(w.x[i], lo[i] + pl);
    if (w.has_hi[i]) w.x[i] = std::min(w.x[i], hi[i] - pu);
  }

  // Gradient-based objective scaling keeps dollar-valued objectives from
  // drowning the per-unit constraint residuals in the KKT system.
  double obj_scale = 1.0;
  {
    const Vec g0 = p.objective_gradient(w.x);
    const double gmax = inf_norm(g0);
    if (gmax > 100.0) obj_scale = 100.0 / gmax;
  }
  NlpProblem ps = p;
  ps.objective = [&p, obj_scale](const Vec& x) { return obj_scale * p.objective(x); };
  ps.objective_gradient = [&p, obj_scale](const Vec& x) {
    Vec g = p.objective_gradient(x);
    for (auto& v : g) v *= obj_scale;
    return g;
  };
  Vec ineq_relax;
  if (p.n_ineq > 0) {
    ineq_relax.assign(p.n_ineq, relax);
    ps.ineq_constraints = [&p, relax](const Vec& x) {
      Vec ci = p.ineq_constraints(x);
      for (auto& v : ci) v -= relax;
      return ci;
    };
  }

  double mu = opt.mu_init;
  detail::evaluate(ps, w);

  w.s.assign(w.mi, 1.0);
  w.nu.assign(w.mi, 1.0);
  for (int i = 0; i < w.mi; ++i) {
    w.s[i] = std::max(1e-2, -w.ci[i]);
    w.nu[i] = mu / w.s[i];
  }
  w.lam.assign(w.me, 0.0);
  w.zl.assign(w.n, 0.0);
  w.zu.assign(w.n, 0.0);
  for (int i = 0; i < w.n; ++i) {
    if (w.has_lo[i]) w.zl[i] = mu / (w.x[i] - lo[i]);
    if (w.has_hi[i]) w.zu[i] = mu / (hi[i] - w.x[i]);
  }

  NlpSolution sol;
  int ls_failures = 0;

  auto residuals = [&lo, &hi](const IpmWork& v, double mu_val, double& stat, double& feas,
                              double& comp) {
    Vec r = v.grad;
    if (v.me > 0) {
      const Vec t = v.je.apply_transposed(v.lam);
      for (int i = 0; i < v.n; ++i) r[i] += t[i];
    }
    if (v.mi > 0) {
      const Vec t = v.ji.apply_transposed(v.nu);
      for (int i = 0; i < v.n; ++i) r[i] += t[i];
    }
    stat = 0.0;
    for (int i = 0; i < v.n; ++i) {
      if (v.fixed[i]) continue;
      double ri = r[i] - v.zl[i] + v.zu[i];
      stat = std::max(stat, std::abs(ri));
    }
    feas = 0.0;
    for (int i = 0; i < v.me; ++i) feas = std::max(feas, std::abs(v.ce[i]));
    for (int i = 0; i < v.mi; ++i) feas = std::max(feas, std::abs(v.ci[i] + v.s[i]));
    comp = 0.0;
    for (int i = 0; i < v.mi; ++i) comp = std::max(comp, std::abs(v.s[i] * v.nu[i] - mu_val));
    for (int i = 0; i < v.n; ++i) {
      if (v.has_lo[i]) comp = std::max(comp, std::abs((v.x[i] - lo[i]) * v.zl[i] - mu_val));
      if (v.has_hi[i]) comp = std::max(comp, std::abs((hi[i] - v.x[i]) * v.zu[i] - mu_val));
    }
  };

  auto scaled_error = [&residuals](const IpmWork& v, double mu_val) {
    double stat, feas, comp;
    residuals(v, mu_val, stat, feas, comp);
    double dsum = one_norm(v.lam) + one_norm(v.nu) + one_norm(v.zl) + one_norm(v.zu);
    int dcount = v.me + v.mi + v.n;
    const double smax = 100.0;
    const double sd = std::max(smax, dsum / std::max(1, dcount)) / smax;
    return std::max({stat / sd, feas, comp / sd});
  };

  // 2-norm of the perturbed primal-dual residual; the Newton step is a
  // descent direction for this merit regardless of nonconvexity
  auto residual_norm2 = [&lo, &hi](const IpmWork& v, double mu_val) {
    Vec r = v.grad;
    if (v.me > 0) {
      const Vec t = v.je.apply_transposed(v.lam);
      for (int i = 0; i < v.n; ++i) r[i] += t[i];
    }
    if (v.mi > 0) {
      const Vec t = v.ji.apply_transposed(v.nu);
      for (int i = 0; i < v.n; ++i) r[i] += t[i];
    }
    double acc = 0.0;
    auto add = [&acc](double t) { acc += t * t; };
    for (int i = 0; i < v.n; ++i)
      if (!v.fixed[i]) add(r[i] - v.zl[i] + v.zu[i]);
    for (int i = 0; i < v.me; ++i) add(v.ce[i]);
    for (int i = 0; i < v.mi; ++i) add(v.ci[i] + v.s[i]);
    for (int i = 0; i < v.mi; ++i) add(v.s[i] * v.nu[i] - mu_val);
    for (int i = 0; i < v.n; ++i) {
      if (v.has_lo[i]) add((v.x[i] - lo[i]) * v.zl[i] - mu_val);
      if (v.has_hi[i]) add((hi[i] - v.x[i]) * v.zu[i] - mu_val);
    }
    return std::sqrt(acc);
  };

  int iter = 0;
  for (; iter < opt.max_iters; ++iter) {
    const double err0 = scaled_error(w, 0.0);
    if (opt.verbose)
      std::fprintf(stderr, "ipm iter %3d  f=% .8e  err=%.3e  mu=%.1e\n", iter, w.f, err0, mu);
    if (err0 <= opt.tol) {
      sol.status = NlpStatus::Converged;
      break;
    }
    // centrality milestone: primal feasibility and the complementarity gap
    // have caught up with the current barrier parameter
    for (;;) {
      if (mu <= opt.tol / 10.0) break;
      double stat, feas, comp;
      residuals(w, mu, stat, feas, comp);
      double dsum = one_norm(w.nu) + one_norm(w.zl) + one_norm(w.zu);
      const double sc = std::max(100.0, dsum / std::max(1, w.mi + w.n)) / 100.0;
      if (std::max(feas, comp / sc) > 10.0 * mu) break;
      mu = std::max(opt.tol / 10.0, mu / 10.0);
    }
    const double tau = std::max(0.99, 1.0 - mu);

    // Hessian of the Lagrangian
    Matrix h = p.lagrangian_hessian ? p.lagrangian_hessian(w.x, obj_scale, w.lam, w.nu)
                                    : detail::fd_lagrangian_hessian(ps, w.x, w.lam, w.nu);
    if (h.rows() != static_cast<std::size_t>(w.n) || h.cols() != static_cast<std::size_t>(w.n))
      throw std::invalid_argument("solve_nlp: Hessian dimension mismatch");

    // W = H + Sigma_L + Sigma_U + J_I^T diag(nu/s) J_I
    const int dim = w.n + w.me;
    Matrix kkt(dim, dim, 0.0);
    for (int i = 0; i < w.n; ++i)
      for (int j = 0; j <= i; ++j) kkt(i, j) = h(i, j);
    for (int i = 0; i < w.n; ++i) {
      if (w.has_lo[i]) kkt(i, i) += w.zl[i] / (w.x[i] - lo[i]);
      if (w.has_hi[i]) kkt(i, i) += w.zu[i] / (hi[i] - w.x[i]);
    }
    if (w.mi > 0) {
      for (int r = 0; r < w.mi; ++r) {
        const double d = w.nu[r] / w.s[r];
        for (int i = 0; i < w.n; ++i) {
          const double jri = w.ji(r, i);
          if (jri == 0.0) continue;
          for (int j = 0; j <= i; ++j) kkt(i, j) += d * jri * w.ji(r, j);
        }
      }
    }
    for (int r = 0; r < w.me; ++r)
      for (int j = 0; j < w.n; ++j) kkt(w.n + r, j) = w.fixed[j] ? 0.0 : w.je(r, j);
    // fixed variables: identity row/col so their step is zero
    for (int i = 0; i < w.n; ++i) {
      if (!w.fixed[i]) continue;
      for (int j = 0; j <= i; ++j) kkt(i, j) = 0.0;
      for (int j = i; j < dim; ++j) kkt(j, i) = 0.0;
      kkt(i, i) = 1.0;
    }

    // rhs
    Vec rhs(dim, 0.0);
    {
      Vec rx = w.grad;
      if (w.me > 0) {
        const Vec t = w.je.apply_transposed(w.lam);
        for (int i = 0; i < w.n; ++i) rx[i] += t[i];
      }
      if (w.mi > 0) {
        Vec t(w.mi);
        for (int r = 0; r < w.mi; ++r) {
          const double r3 = w.ci[r] + w.s[r];
          t[r] = (w.nu[r] / w.s[r]) * r3 + mu / w.s[r];
        }
        const Vec jt = w.ji.apply_transposed(t);
        for (int i = 0; i < w.n; ++i) rx[i] += jt[i];
      }
      for (int i = 0; i < w.n; ++i) {
        if (w.has_lo[i]) rx[i] -= mu / (w.x[i] - lo[i]);
        if (w.has_hi[i]) rx[i] += mu / (hi[i] - w.x[i]);
      }
      for (int i = 0; i < w.n; ++i) rhs[i] = w.fixed[i] ? 0.0 : -rx[i];
      for (int r = 0; r < w.me; ++r) rhs[w.n + r] = -w.ce[r];
    }

    // Factor the exact KKT system; an exact solve gives a descent direction
    // for the residual norm whatever the inertia. Singular systems are
    // repaired by adding delta*I, starting at 1e-8 and multiplying by 10.
    Vec step;
    double delta_w = 0.0, delta_c = 0.0;
    for (int attempt = 0;; ++attempt) {
      Matrix reg = kkt;
      if (delta_w > 0.0)
        for (int i = 0; i < w.n; ++i)
          if (!w.fixed[i]) reg(i, i) += delta_w;
      if (delta_c > 0.0)
        for (int r = 0; r < w.me; ++r) reg(w.n + r, w.n + r) -= delta_c;
      LdltFactor fac(reg);
      const Inertia in = fac.inertia();
      if (in.zero == 0) {
        step = fac.solve(rhs);
        // one round of iterative refinement; the barrier systems are stiff
        {
          Vec resid = rhs;
          for (int i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (int j = 0; j < dim; ++j) acc += ((j <= i) ? reg(i, j) : reg(j, i)) * step[j];
            resid[i] -= acc;
          }
          const Vec corr = fac.solve(resid);
          for (int i = 0; i < dim; ++i) step[i] += corr[i];
        }
        break;
      }
      if (delta_c == 0.0) delta_c = 1e-8;
      delta_w = (delta_w == 0.0) ? 1e-8 : delta_w * 10.0;
      if (delta_w > 1e40) {
        sol.status = NlpStatus::Infeasible;
        sol.point = w.x;
        sol.iterations = iter;
        sol.objective_value = w.f / obj_scale;
        double stat, feas, comp;
        residuals(w, 0.0, stat, feas, comp);
        sol.kkt_error = std::max({stat, feas, comp});
        sol.max_eq_violation = inf_norm(w.ce);
        double iv = 0.0;
        for (int i = 0; i < w.mi; ++i) iv = std::max(iv, w.ci[i] + ineq_relax[i]);
        sol.max_ineq_violation = iv;
        sol.eq_multipliers = w.lam;
        sol.ineq_multipliers = w.nu;
        return sol;
      }
    }

    Vec dx(step.begin(), step.begin() + w.n);
    Vec dlam(step.begin() + w.n, step.end());

    // recover slack and dual steps
    Vec ds(w.mi, 0.0), dnu(w.mi, 0.0);
    if (w.mi > 0) {
      const Vec jidx = w.ji.apply(dx);
      for (int r = 0; r < w.mi; ++r) {
        ds[r] = -(w.ci[r] + w.s[r]) - jidx[r];
        dnu[r] = mu / w.s[r] - w.nu[r] - (w.nu[r] / w.s[r]) * ds[r];
      }
    }
    Vec dzl(w.n, 0.0), dzu(w.n, 0.0);
    for (int i = 0; i < w.n; ++i) {
      if (w.has_lo[i])
        dzl[i] = mu / (w.x[i] - lo[i]) - w.zl[i] - (w.zl[i] / (w.x[i] - lo[i])) * dx[i];
      if (w.has_hi[i])
        dzu[i] = mu / (hi[i] - w.x[i]) - w.zu[i] + (w.zu[i] / (hi[i] - w.x[i])) * dx[i];
    }

    // fraction-to-boundary step limits
    double alpha_pri = 1.0, alpha_dual = 1.0;
    for (int r = 0; r < w.mi; ++r) {
      if (ds[r] < 0.0) alpha_pri = std::min(alpha_pri, -tau * w.s[r] / ds[r]);
      if (dnu[r] < 0.0) alpha_dual = std::min(alpha_dual, -tau * w.nu[r] / dnu[r]);
    }
    for (int i = 0; i < w.n; ++i) {
      if (w.has_lo[i]) {
        if (dx[i] < 0.0) alpha_pri = std::min(alpha_pri, -tau * (w.x[i] - lo[i]) / dx[i]);
        if (dzl[i] < 0.0) alpha_dual = std::min(alpha_dual, -tau * w.zl[i] / dzl[i]);
      }
      if (w.has_hi[i]) {
        if (dx[i] > 0.0) alpha_pri = std::min(alpha_pri, tau * (hi[i] - w.x[i]) / dx[i]);
        if (dzu[i] < 0.0) alpha_dual = std::min(alpha_dual, -tau * w.zu[i] / dzu[i]);
      }
    }

    auto make_step = [&](double a_pri, double a_dual) {
      IpmWork probe = w;
      for (int i = 0; i < w.n; ++i) probe.x[i] = w.x[i] + a_pri * dx[i];
      for (int i = 0; i < w.mi; ++i) probe.s[i] = std::max(1e-300, w.s[i] + a_pri * ds[i]);
      for (int r = 0; r < w.me; ++r) probe.lam[r] = w.lam[r] + a_pri * dlam[r];
      for (int r = 0; r < w.mi; ++r) probe.nu[r] = std::max(1e-16, w.nu[r] + a_dual * dnu[r]);
      for (int i = 0; i < w.n; ++i) {
        if (w.has_lo[i]) probe.zl[i] = std::max(1e-16, w.zl[i] + a_dual * dzl[i]);
        if (w.has_hi[i]) probe.zu[i] = std::max(1e-16, w.zu[i] + a_dual * dzu[i]);
      }
      return probe;
    };

    // Damped Newton on the perturbed residual: one shared step length for
    // every block (so trials stay on the Newton ray, which is a descent
    // direction for ||r||), capped by the fraction-to-boundary limit.
    const double alpha_max = std::min(alpha_pri, alpha_dual);
    const double phi0 = residual_norm2(w, mu);
    bool accepted = false;
    // first candidate: independent fraction-to-boundary steps for the primal
    // and dual blocks; when one dual is pinned this still lets the rest move
    if (alpha_dual != alpha_pri) {
      IpmWork probe = make_step(alpha_pri, alpha_dual);
      detail::evaluate(ps, probe);
      const double phi = residual_norm2(probe, mu);
      if (std::isfinite(phi) && phi <= (1.0 - 1e-4 * alpha_max) * phi0) {
        w = std::move(probe);
        accepted = true;
      }
    }
    if (!accepted) {
      double alpha = alpha_max;
      IpmWork best = w;
      double best_phi = kInf;
      for (int bt = 0; bt < 40; ++bt) {
        IpmWork probe = make_step(alpha, alpha);
        detail::evaluate(ps, probe);
        const double phi = residual_norm2(probe, mu);
        if (bt == 0 || phi < best_phi) {
          best_phi = phi;
          best = probe;
        }
        if (std::isfinite(phi) && phi <= (1.0 - 1e-4 * alpha) * phi0) {
          w = std::move(probe);
          accepted = true;
          break;
        }
        alpha *= 0.5;
        if (alpha < 1e-12) break;
      }
      if (!accepted && best_phi < phi0) {
        w = std::move(best);  // some progress, keep the best trial
        accepted = true;
      }
    }

    if (!accepted) {
      ++ls_failures;
      if (ls_failures >= 5) {
        double stat, feas, comp;
        residuals(w, 0.0, stat, feas, comp);
        sol.status = (feas > opt.tol) ? NlpStatus::Infeasible : NlpStatus::IterLimit;
        break;
      }
      IpmWork probe = make_step(1e-4 * alpha_max, 1e-4 * alpha_max);  // escape step
      detail::evaluate(ps, probe);
      w = std::move(probe);
    } else {
      ls_failures = 0;
    }

    // dual safeguard keeps z within a large box around mu/gap
    const double ksig = 1e10;
    for (int i = 0; i < w.n; ++i) {
      if (w.has_lo[i]) {
        const double g = w.x[i] - lo[i];
        w.zl[i] = std::clamp(w.zl[i], mu / (ksig * g), ksig * mu / g);
      }
      if (w.has_hi[i]) {
        const double g = hi[i] - w.x[i];
        w.zu[i] = std::clamp(w.zu[i], mu / (ksig * g), ksig * mu / g);
      }
    }
    for (int i = 0; i < w.mi; ++i)
      w.nu[i] = std::clamp(w.nu[i], mu / (ksig * w.s[i]), ksig * mu / w.s[i]);
  }

  if (iter >= opt.max_iters) sol.status = NlpStatus::IterLimit;

  sol.point = w.x;
  sol.objective_value = w.f / obj_scale;
  sol.iterations = iter;
  sol.max_eq_violation = (w.me > 0) ? inf_norm(w.ce) : 0.0;
  double iv = 0.0;
  for (int i = 0; i < w.mi; ++i) iv = std::max(iv, w.ci[i] + ineq_relax[i]);
  sol.max_ineq_violation = std::max(0.0, iv);
  double stat, feas, comp;
  residuals(w, 0.0, stat, feas, comp);
  sol.kkt_error = std::max({stat, feas, comp});
  sol.eq_multipliers = w.lam;
  sol.ineq_multipliers = w.nu;
  return sol;
}

}  // namespace gridres
