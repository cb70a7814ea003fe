#pragma once

// Two-phase primal simplex for linear programs with bounded variables:
//
//   min c.x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lo <= x <= hi
//
// Full dense tableau, Dantzig pricing with a Bland fallback after stalls.
// Deterministic: ties break toward the smallest column/row index.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gridres/linalg.hpp"
#include "gridres/nlp.hpp"

namespace gridres {

struct LinearProgram {
  int n = 0;
  Vec c;
  Matrix a_eq;
  Vec b_eq;
  Matrix a_ub;
  Vec b_ub;
  Vec lower;
  Vec upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpSolution {
  LpStatus status = LpStatus::IterLimit;
  Vec x;
  double objective = 0.0;
};

namespace detail {

class SimplexTableau {
 public:
  explicit SimplexTableau(const LinearProgram& lp) {
    n_struct_ = lp.n;
    const int m_eq = static_cast<int>(lp.b_eq.size());
    const int m_ub = static_cast<int>(lp.b_ub.size());
    m_ = m_eq + m_ub;
    n_ = n_struct_ + m_ub + m_;  // structural + slack + artificial
    art0_ = n_struct_ + m_ub;

    lo_ = lp.lower;
    hi_ = lp.upper;
    if (static_cast<int>(lo_.size()) != n_struct_ || static_cast<int>(hi_.size()) != n_struct_)
      throw std::invalid_argument("solve_lp: bound size mismatch");
    lo_.resize(n_, 0.0);
    hi_.resize(n_, kInf);

    a_ = Matrix(m_, n_, 0.0);
    b_.assign(m_, 0.0);
    for (int r = 0; r < m_eq; ++r) {
      for (int j = 0; j < n_struct_; ++j) a_(r, j) = lp.a_eq(r, j);
      b_[r] = lp.b_eq[r];
    }
    for (int r = 0; r < m_ub; ++r) {
      for (int j = 0; j < n_struct_; ++j) a_(m_eq + r, j) = lp.a_ub(r, j);
      a_(m_eq + r, n_struct_ + r) = 1.0;  // slack
      b_[m_eq + r] = lp.b_ub[r];
    }

    // nonbasic start at a finite bound (lower preferred), free vars at 0
    stat_.assign(n_, AtLower);
    val_.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) {
        stat_[j] = AtLower;
        val_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        stat_[j] = AtUpper;
        val_[j] = hi_[j];
      } else {
        stat_[j] = Free;
        val_[j] = 0.0;
      }
    }

    // artificial basis absorbing the residual
    Vec resid = b_;
    for (int r = 0; r < m_; ++r)
      for (int j = 0; j < n_struct_ + m_ub; ++j) resid[r] -= a_(r, j) * val_[j];
    basis_.resize(m_);
    xb_.resize(m_);
    tab_ = a_;
    for (int r = 0; r < m_; ++r) {
      const int aj = art0_ + r;
      a_(r, aj) = (resid[r] >= 0.0) ? 1.0 : -1.0;
      tab_(r, aj) = a_(r, aj);
      basis_[r] = aj;
      xb_[r] = std::abs(resid[r]);
      stat_[aj] = Basic;
      if (a_(r, aj) < 0.0) {
        // normalize row so the basic column is +1
        for (int j = 0; j < n_; ++j) tab_(r, j) = -tab_(r, j);
      }
    }
  }

  // Rebuild tab_ and xb_ exactly from the recorded basis, wiping out the
  // numerical drift that incremental pivoting accumulates. Returns false if
  // the recorded basis matrix is singular.
  bool refactorize() {
    Matrix lu(m_, m_);
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) lu(r, c) = a_(r, basis_[c]);
    std::vector<int> perm(m_);
    for (int i = 0; i < m_; ++i) perm[i] = i;
    for (int k = 0; k < m_; ++k) {
      int piv = k;
      for (int r = k + 1; r < m_; ++r)
        if (std::abs(lu(r, k)) > std::abs(lu(piv, k))) piv = r;
      if (std::abs(lu(piv, k)) < 1e-12) return false;
      if (piv != k) {
        for (int c = 0; c < m_; ++c) std::swap(lu(k, c), lu(piv, c));
        std::swap(perm[k], perm[piv]);
      }
      for (int r = k + 1; r < m_; ++r) {
        const double f = lu(r, k) / lu(k, k);
        lu(r, k) = f;
        for (int c = k + 1; c < m_; ++c) lu(r, c) -= f * lu(k, c);
      }
    }
    auto solve_inplace = [&](Vec& v) {
      Vec y(m_);
      for (int i = 0; i < m_; ++i) y[i] = v[perm[i]];
      for (int k = 0; k < m_; ++k)
        for (int r = k + 1; r < m_; ++r) y[r] -= lu(r, k) * y[k];
      for (int k = m_ - 1; k >= 0; --k) {
        for (int c = k + 1; c < m_; ++c) y[k] -= lu(k, c) * y[c];
        y[k] /= lu(k, k);
      }
      v = y;
    };
    // Only columns that pricing can select need B^-1 a_j: basic columns are
    // unit vectors by definition and pinned columns are never entered.
    Vec col(m_);
    for (int j = 0; j < n_; ++j) {
      if (stat_[j] == Basic) continue;
      if (lo_[j] == hi_[j] && stat_[j] != Free) continue;
      for (int r = 0; r < m_; ++r) col[r] = a_(r, j);
      solve_inplace(col);
      for (int r = 0; r < m_; ++r) tab_(r, j) = col[r];
    }
    for (int r = 0; r < m_; ++r) {
      for (int rr = 0; rr < m_; ++rr) tab_(rr, basis_[r]) = 0.0;
      tab_(r, basis_[r]) = 1.0;
    }
    Vec rhs(m_);
    for (int r = 0; r < m_; ++r) {
      double acc = b_[r];
      for (int j = 0; j < n_; ++j)
        if (stat_[j] != Basic) acc -= a_(r, j) * val_[j];
      rhs[r] = acc;
    }
    solve_inplace(rhs);
    xb_ = rhs;
    return true;
  }

  LpStatus run(const Vec& costs, int max_iters) {
    int stall = 0;
    int since_refactor = 0;
    bool clean = true;  // tableau freshly factorized
    bool bland = false;
    double last_obj = objective(costs);
    for (int it = 0; it < max_iters; ++it) {
      if (since_refactor >= 64) {
        if (!refactorize()) return LpStatus::IterLimit;
        since_refactor = 0;
        clean = true;
      }
      // reduced costs
      Vec cb(m_);
      for (int r = 0; r < m_; ++r) cb[r] = costs[basis_[r]];
      int enter = -1;
      double best = -1e-9;
      int dir = +1;
      for (int j = 0; j < n_; ++j) {
        if (stat_[j] == Basic) continue;
        if (lo_[j] == hi_[j] && stat_[j] != Free) continue;  // pinned
        double z = costs[j];
        for (int r = 0; r < m_; ++r) z -= cb[r] * tab_(r, j);
        int d = 0;
        if (stat_[j] == AtLower || stat_[j] == Free) {
          if (z < -1e-9) d = +1;
        }
        if (d == 0 && stat_[j] == AtUpper && z > 1e-9) d = -1;
        if (d == 0 && stat_[j] == Free && z > 1e-9) d = -1;
        if (d != 0) {
          const double score = std::abs(z);
          if (bland) {
            enter = j;
            dir = d;
            break;
          }
          if (score > best + 1e-15) {
            best = score;
            enter = j;
            dir = d;
          }
        }
      }
      if (enter < 0) {
        // only terminate on a freshly factorized tableau; drift can both
        // hide entering candidates and fabricate them
        if (clean) return LpStatus::Optimal;
        if (!refactorize()) return LpStatus::IterLimit;
        since_refactor = 0;
        clean = true;
        continue;
      }

      // Two-pass ratio test. Pass one finds the tightest step; pass two
      // picks, among the rows blocking within a small tolerance of it, the
      // one with the largest pivot magnitude (ties to the smallest basis
      // index). Preferring big pivots keeps the tableau from being wrecked
      // by a 1e-11 pivot element.
      double t_max = hi_[enter] - lo_[enter];  // bound-flip span, may be inf
      auto row_ratio = [&](int r, double& t, int& to_upper) {
        const double d = dir * tab_(r, enter);
        const int k = basis_[r];
        if (d > 1e-11) {
          if (!std::isfinite(lo_[k])) return false;
          t = (xb_[r] - lo_[k]) / d;
          to_upper = 0;
        } else if (d < -1e-11) {
          if (!std::isfinite(hi_[k])) return false;
          t = (hi_[k] - xb_[r]) / (-d);
          to_upper = 1;
        } else {
          return false;
        }
        if (t < 0.0) t = 0.0;
        return true;
      };
      double t_min = t_max;
      for (int r = 0; r < m_; ++r) {
        double t;
        int to_upper;
        if (row_ratio(r, t, to_upper)) t_min = std::min(t_min, t);
      }
      int leave_row = -1;
      int leave_to_upper = 0;
      double best_piv = 0.0;
      for (int r = 0; r < m_; ++r) {
        double t;
        int to_upper;
        if (!row_ratio(r, t, to_upper)) continue;
        if (t > t_min + 1e-9) continue;
        const double piv = std::abs(tab_(r, enter));
        if (piv > best_piv + 1e-15 ||
            (piv > best_piv - 1e-15 && leave_row >= 0 && basis_[r] < basis_[leave_row])) {
          best_piv = piv;
          leave_row = r;
          leave_to_upper = to_upper;
        }
      }
      if (leave_row >= 0) t_max = t_min;

      if (leave_row < 0 && !std::isfinite(t_max)) return LpStatus::Unbounded;

      if (leave_row < 0) {
        // bound flip of the entering variable
        for (int r = 0; r < m_; ++r) xb_[r] -= t_max * dir * tab_(r, enter);
        val_[enter] = (dir > 0) ? hi_[enter] : lo_[enter];
        stat_[enter] = (dir > 0) ? AtUpper : AtLower;
        clean = false;
        ++since_refactor;
      } else {
        // pivot
        const double enter_val = val_[enter] + dir * t_max;
        for (int r = 0; r < m_; ++r)
          if (r != leave_row) xb_[r] -= t_max * dir * tab_(r, enter);
        const int out = basis_[leave_row];
        stat_[out] = leave_to_upper ? AtUpper : AtLower;
        val_[out] = leave_to_upper ? hi_[out] : lo_[out];
        if (!std::isfinite(val_[out])) val_[out] = 0.0;  // free leaving var

        const double piv = tab_(leave_row, enter);
        for (int j = 0; j < n_; ++j) tab_(leave_row, j) /= piv;
        for (int r = 0; r < m_; ++r) {
          if (r == leave_row) continue;
          const double f = tab_(r, enter);
          if (f == 0.0) continue;
          for (int j = 0; j < n_; ++j) tab_(r, j) -= f * tab_(leave_row, j);
        }
        basis_[leave_row] = enter;
        stat_[enter] = Basic;
        xb_[leave_row] = enter_val;
        clean = false;
        ++since_refactor;
      }

      const double obj = objective(costs);
      if (obj < last_obj - 1e-12) {
        stall = 0;
        last_obj = obj;
      } else if (++stall > 64) {
        bland = true;
      }
    }
    return LpStatus::IterLimit;
  }

  double objective(const Vec& costs) const {
    double v = 0.0;
    for (int j = 0; j < n_; ++j)
      if (stat_[j] != Basic) v += costs[j] * val_[j];
    for (int r = 0; r < m_; ++r) v += costs[basis_[r]] * xb_[r];
    return v;
  }

  Vec extract(int n_struct) const {
    Vec x(n_struct, 0.0);
    for (int j = 0; j < n_struct; ++j)
      if (stat_[j] != Basic) x[j] = val_[j];
    for (int r = 0; r < m_; ++r)
      if (basis_[r] < n_struct) x[basis_[r]] = xb_[r];
    return x;
  }

  int total_vars() const { return n_; }
  int art0() const { return art0_; }
  int rows() const { return m_; }

  void pin_artificials() {
    for (int j = art0_; j < n_; ++j) {
      lo_[j] = 0.0;
      hi_[j] = 0.0;
      if (stat_[j] != Basic) {
        stat_[j] = AtLower;
        val_[j] = 0.0;
      }
    }
  }

 private:
  enum Status { Basic, AtLower, AtUpper, Free };
  int n_struct_ = 0, m_ = 0, n_ = 0, art0_ = 0;
  Matrix a_, tab_;
  Vec b_, lo_, hi_, xb_, val_;
  std::vector<int> basis_;
  std::vector<Status> stat_;
};

// Residual audit of a candidate point against the original program.
inline double lp_infeasibility(const LinearProgram& lp, const Vec& x) {
  double viol = 0.0;
  if (lp.b_eq.size() > 0) {
    const Vec r = lp.a_eq.apply(x);
    for (std::size_t i = 0; i < lp.b_eq.size(); ++i)
      viol = std::max(viol, std::abs(r[i] - lp.b_eq[i]));
  }
  if (lp.b_ub.size() > 0) {
    const Vec r = lp.a_ub.apply(x);
    for (std::size_t i = 0; i < lp.b_ub.size(); ++i) viol = std::max(viol, r[i] - lp.b_ub[i]);
  }
  for (int j = 0; j < lp.n; ++j) {
    viol = std::max(viol, lp.lower[j] - x[j]);
    if (std::isfinite(lp.upper[j])) viol = std::max(viol, x[j] - lp.upper[j]);
  }
  return viol;
}

// Interior-point path for the rare LP the tableau method mishandles.
inline LpSolution solve_lp_via_interior_point(const LinearProgram& lp) {
  NlpProblem p;
  p.n_vars = lp.n;
  p.objective = [&lp](const Vec& x) { return dot(lp.c, x); };
  p.objective_gradient = [&lp](const Vec&) { return lp.c; };
  p.n_eq = static_cast<int>(lp.b_eq.size());
  if (p.n_eq > 0) {
    p.eq_constraints = [&lp](const Vec& x) {
      Vec r = lp.a_eq.apply(x);
      for (std::size_t i = 0; i < lp.b_eq.size(); ++i) r[i] -= lp.b_eq[i];
      return r;
    };
    p.eq_jacobian = [&lp](const Vec&) { return lp.a_eq; };
  }
  p.n_ineq = static_cast<int>(lp.b_ub.size());
  if (p.n_ineq > 0) {
    p.ineq_constraints = [&lp](const Vec& x) {
      Vec r = lp.a_ub.apply(x);
      for (std::size_t i = 0; i < lp.b_ub.size(); ++i) r[i] -= lp.b_ub[i];
      return r;
    };
    p.ineq_jacobian = [&lp](const Vec&) { return lp.a_ub; };
  }
  p.lower = lp.lower;
  p.upper = lp.upper;
  p.initial_point.assign(lp.n, 0.0);
  for (int j = 0; j < lp.n; ++j) {
    if (std::isfinite(lp.lower[j]) && std::isfinite(lp.upper[j]))
      p.initial_point[j] = 0.5 * (lp.lower[j] + lp.upper[j]);
    else if (std::isfinite(lp.lower[j]))
      p.initial_point[j] = lp.lower[j] + 1.0;
    else if (std::isfinite(lp.upper[j]))
      p.initial_point[j] = lp.upper[j] - 1.0;
  }
  p.lagrangian_hessian = [n = lp.n](const Vec&, double, const Vec&, const Vec&) {
    return Matrix(n, n, 0.0);
  };
  NlpOptions opt;
  opt.tol = 1e-9;
  opt.max_iters = 500;
  const auto nlp_sol = solve_nlp(p, opt);
  LpSolution sol;
  switch (nlp_sol.status) {
    case NlpStatus::Converged:
      sol.status = LpStatus::Optimal;
      sol.x = nlp_sol.point;
      sol.objective = dot(lp.c, sol.x);
      break;
    case NlpStatus::Infeasible:
      sol.status = LpStatus::Infeasible;
      break;
    case NlpStatus::IterLimit:
      sol.status = LpStatus::IterLimit;
      break;
  }
  return sol;
}

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, int max_iters = 20000) {
  if (static_cast<int>(lp.c.size()) != lp.n)
    throw std::invalid_argument("solve_lp: cost size mismatch");
  for (int i = 0; i < lp.n; ++i)
    if (lp.lower[i] > lp.upper[i]) {
      LpSolution s;
      s.status = LpStatus::Infeasible;
      return s;
    }

  detail::SimplexTableau t(lp);

  Vec phase1(t.total_vars(), 0.0);
  for (int j = t.art0(); j < t.total_vars(); ++j) phase1[j] = 1.0;
  LpStatus st = t.run(phase1, max_iters);
  LpSolution sol;
  if (st == LpStatus::IterLimit) {
    sol.status = LpStatus::IterLimit;
    return sol;
  }
  if (t.objective(phase1) > 1e-7) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  t.pin_artificials();
  Vec phase2(t.total_vars(), 0.0);
  for (int j = 0; j < lp.n; ++j) phase2[j] = lp.c[j];
  st = t.run(phase2, max_iters);
  sol.status = st;
  if (st == LpStatus::Optimal) {
    sol.x = t.extract(lp.n);
    sol.objective = dot(sol.x, lp.c);
    // audit the claimed optimum; hand pathological cases to the
    // interior-point path rather than returning a broken basis
    if (detail::lp_infeasibility(lp, sol.x) > 1e-7)
      return detail::solve_lp_via_interior_point(lp);
  }
  return sol;
}

}  // namespace gridres
