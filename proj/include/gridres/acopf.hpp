#pragma once

// Physical layer: branch-flow physics, generation cost, and assembly of the
// single-period OPF and the multi-period ESS-coupled dispatch as NlpProblems.
//
// Variables are per-unit; per period the layout is [theta | V | Pgen | Qgen],
// periods are stacked, and each active storage unit appends a power profile
// and an energy trajectory. Energies carry plain box bounds and couple to the
// powers through linear equalities e_t = e_{t-1} + dt*P_t; reported energies
// are recomputed from the powers by the exact recursion.

#include <cmath>
#include <memory>
#include <utility>

#include "gridres/nlp.hpp"
#include "gridres/types.hpp"

namespace gridres {

struct NetworkState {
  Vec v;      // per-bus voltage magnitude, pu
  Vec theta;  // per-bus angle, rad
};

struct Dispatch {
  Vec p_gen;  // MW, per generator
  Vec q_gen;  // MVAr
  Vec p_ess;  // MW per active ESS, positive = charging
};

struct BranchFlow {
  double p = 0.0;  // pu
  double q = 0.0;
};

// Directional active/reactive flow of a line evaluated from -> to.
inline BranchFlow branch_flows(const NetworkState& state, const Line& line,
                               const PowerCase& pc) {
  const int i = pc.bus_index(line.from_bus);
  const int j = pc.bus_index(line.to_bus);
  const double vi = state.v[i], vj = state.v[j];
  const double d = state.theta[i] - state.theta[j];
  const double c = std::cos(d), s = std::sin(d);
  const double t1 = vi * vj * c, t2 = vi * vj * s;
  BranchFlow f;
  f.p = line.g * (vi * vi - t1) - line.b * t2;
  f.q = line.b * (t1 - vi * vi) - line.g * t2;
  return f;
}

// Per-bus active/reactive power mismatch in pu: flows minus generation plus
// scaled load plus storage charging. Zero everywhere means balanced.
inline std::pair<Vec, Vec> nodal_mismatch(const NetworkState& state, const Dispatch& dispatch,
                                          const PowerCase& pc, double load_scale,
                                          const std::vector<int>& active_ess = {}) {
  const int nb = static_cast<int>(pc.buses.size());
  Vec dp(nb, 0.0), dq(nb, 0.0);
  for (const auto& line : pc.lines) {
    const int i = pc.bus_index(line.from_bus);
    const int j = pc.bus_index(line.to_bus);
    const double vi = state.v[i], vj = state.v[j];
    const double d = state.theta[i] - state.theta[j];
    const double c = std::cos(d), s = std::sin(d);
    const double t1 = vi * vj * c, t2 = vi * vj * s;
    dp[i] += line.g * (vi * vi - t1) - line.b * t2;
    dq[i] += line.b * (t1 - vi * vi) - line.g * t2;
    dp[j] += line.g * (vj * vj - t1) + line.b * t2;
    dq[j] += line.b * (t1 - vj * vj) + line.g * t2;
  }
  for (std::size_t g = 0; g < pc.generators.size(); ++g) {
    const int i = pc.bus_index(pc.generators[g].bus);
    dp[i] -= dispatch.p_gen[g] / pc.base_mva;
    dq[i] -= dispatch.q_gen[g] / pc.base_mva;
  }
  for (const auto& load : pc.loads) {
    const int i = pc.bus_index(load.bus);
    dp[i] += load_scale * load.p_load / pc.base_mva;
    dq[i] += load_scale * load.q_load / pc.base_mva;
  }
  for (std::size_t e = 0; e < active_ess.size(); ++e) {
    const int i = pc.bus_index(pc.ess_units[active_ess[e]].bus);
    dp[i] += dispatch.p_ess[e] / pc.base_mva;
  }
  return {dp, dq};
}

// Hourly generation cost in $ (quadratic polynomial), dispatch in MW.
inline double generation_cost(const Dispatch& dispatch, const PowerCase& pc) {
  double cost = 0.0;
  for (std::size_t g = 0; g < pc.generators.size(); ++g) {
    const auto& gen = pc.generators[g];
    const double p = dispatch.p_gen[g];
    cost += gen.cost_c2 * p * p + gen.cost_c1 * p + gen.cost_c0;
  }
  return cost;
}

struct DispatchResult {
  std::vector<Dispatch> periods;
  std::vector<NetworkState> states;
  std::vector<Vec> ess_energy;  // [active ESS][period], MWh at end of period
  std::vector<int> active_ess;  // indices into case.ess_units
  double total_cost = 0.0;      // sum of per-period generation cost, $
  NlpStatus status = NlpStatus::IterLimit;
  int iterations = 0;
  double max_mismatch = 0.0;          // independent re-evaluation, pu
  double max_bound_violation = 0.0;   // independent re-evaluation
  double objective_value = 0.0;       // solver objective (weighted)
};

namespace detail {

struct OpfStructure {
  PowerCase pc;
  int T = 1;
  double dt = 1.0;
  Vec load_scale;
  std::vector<int> active_ess;
  std::vector<std::vector<int>> disabled_gens;  // per period, generator indices
  double alpha2 = 1.0, alpha3 = 1.0;

  int nb = 0, ng = 0, nl = 0, ne = 0;
  int per_period = 0;
  int n_vars = 0, n_eq = 0, n_ineq = 0;
  int slack = 0;
  std::vector<int> line_from, line_to;  // internal bus indices
  std::vector<int> gen_bus, load_bus, ess_bus;

  int idx_theta(int t, int b) const { return t * per_period + b; }
  int idx_v(int t, int b) const { return t * per_period + nb + b; }
  int idx_pg(int t, int g) const { return t * per_period + 2 * nb + g; }
  int idx_qg(int t, int g) const { return t * per_period + 2 * nb + ng + g; }
  int idx_pess(int e, int t) const { return T * per_period + e * T + t; }
  int idx_eess(int e, int t) const { return T * per_period + (ne + e) * T + t; }
  int eq_energy_row(int e, int t) const { return 2 * nb * T + e * T + t; }

  bool gen_disabled(int t, int g) const {
    for (int d : disabled_gens[t])
      if (d == g) return true;
    return false;
  }

  void finish() {
    nb = static_cast<int>(pc.buses.size());
    ng = static_cast<int>(pc.generators.size());
    nl = static_cast<int>(pc.lines.size());
    ne = static_cast<int>(active_ess.size());
    per_period = 2 * nb + 2 * ng;
    n_vars = T * per_period + 2 * ne * T;  // power and energy per storage unit
    n_eq = 2 * nb * T + ne * T;            // mismatch rows plus energy coupling
    n_ineq = 0;
    slack = pc.slack_index();
    for (const auto& l : pc.lines) {
      line_from.push_back(pc.bus_index(l.from_bus));
      line_to.push_back(pc.bus_index(l.to_bus));
    }
    for (const auto& g : pc.generators) gen_bus.push_back(pc.bus_index(g.bus));
    for (const auto& l : pc.loads) load_bus.push_back(pc.bus_index(l.bus));
    for (int e : active_ess) ess_bus.push_back(pc.bus_index(pc.ess_units[e].bus));
  }
};

inline double opf_objective(const OpfStructure& st, const Vec& x) {
  const double base = st.pc.base_mva;
  double f = 0.0;
  for (int t = 0; t < st.T; ++t) {
    for (int g = 0; g < st.ng; ++g) {
      const auto& gen = st.pc.generators[g];
      const double p = base * x[st.idx_pg(t, g)];
      f += st.alpha2 * (gen.cost_c2 * p * p + gen.cost_c1 * p + gen.cost_c0);
    }
  }
  for (int e = 0; e < st.ne; ++e) {
    const double w = st.pc.ess_units[st.active_ess[e]].degradation_weight;
    for (int t = 0; t < st.T; ++t) {
      const double p = base * x[st.idx_pess(e, t)];
      f += st.alpha3 * w * p * p;
    }
  }
  return f;
}

inline Vec opf_gradient(const OpfStructure& st, const Vec& x) {
  const double base = st.pc.base_mva;
  Vec g(st.n_vars, 0.0);
  for (int t = 0; t < st.T; ++t) {
    for (int gi = 0; gi < st.ng; ++gi) {
      const auto& gen = st.pc.generators[gi];
      const double p = base * x[st.idx_pg(t, gi)];
      g[st.idx_pg(t, gi)] = st.alpha2 * (2.0 * gen.cost_c2 * p + gen.cost_c1) * base;
    }
  }
  for (int e = 0; e < st.ne; ++e) {
    const double w = st.pc.ess_units[st.active_ess[e]].degradation_weight;
    for (int t = 0; t < st.T; ++t) {
      const double p = base * x[st.idx_pess(e, t)];
      g[st.idx_pess(e, t)] = st.alpha3 * 2.0 * w * p * base;
    }
  }
  return g;
}

inline Vec opf_equalities(const OpfStructure& st, const Vec& x) {
  const double base = st.pc.base_mva;
  Vec ce(st.n_eq, 0.0);
  for (int t = 0; t < st.T; ++t) {
    const int off = t * 2 * st.nb;
    for (int l = 0; l < st.nl; ++l) {
      const int i = st.line_from[l], j = st.line_to[l];
      const double vi = x[st.idx_v(t, i)], vj = x[st.idx_v(t, j)];
      const double d = x[st.idx_theta(t, i)] - x[st.idx_theta(t, j)];
      const double c = std::cos(d), s = std::sin(d);
      const double g = st.pc.lines[l].g, b = st.pc.lines[l].b;
      const double t1 = vi * vj * c, t2 = vi * vj * s;
      ce[off + i] += g * (vi * vi - t1) - b * t2;
      ce[off + st.nb + i] += b * (t1 - vi * vi) - g * t2;
      ce[off + j] += g * (vj * vj - t1) + b * t2;
      ce[off + st.nb + j] += b * (t1 - vj * vj) + g * t2;
    }
    for (int g = 0; g < st.ng; ++g) {
      ce[off + st.gen_bus[g]] -= x[st.idx_pg(t, g)];
      ce[off + st.nb + st.gen_bus[g]] -= x[st.idx_qg(t, g)];
    }
    for (std::size_t li = 0; li < st.pc.loads.size(); ++li) {
      const auto& load = st.pc.loads[li];
      ce[off + st.load_bus[li]] += st.load_scale[t] * load.p_load / base;
      ce[off + st.nb + st.load_bus[li]] += st.load_scale[t] * load.q_load / base;
    }
    for (int e = 0; e < st.ne; ++e) ce[off + st.ess_bus[e]] += x[st.idx_pess(e, t)];
  }
  const double span = st.dt * base;
  for (int e = 0; e < st.ne; ++e) {
    const auto& unit = st.pc.ess_units[st.active_ess[e]];
    for (int t = 0; t < st.T; ++t) {
      const double prev = (t == 0) ? unit.e_initial : x[st.idx_eess(e, t - 1)];
      ce[st.eq_energy_row(e, t)] = x[st.idx_eess(e, t)] - prev - span * x[st.idx_pess(e, t)];
    }
  }
  return ce;
}

// Partials of the directional flow (P_ab, Q_ab) with a, b internal bus
// indices, accumulated into the mismatch rows of bus a for period t.
inline void add_flow_jacobian(const OpfStructure& st, Matrix& jac, const Vec& x, int t, int a,
                              int b, double g, double badm) {
  const double va = x[st.idx_v(t, a)], vb = x[st.idx_v(t, b)];
  const double d = x[st.idx_theta(t, a)] - x[st.idx_theta(t, b)];
  const double c = std::cos(d), s = std::sin(d);
  const double t1 = va * vb * c, t2 = va * vb * s;
  const int off = t * 2 * st.nb;

  const double dp_dva = g * (2.0 * va - vb * c) - badm * vb * s;
  const double dp_dvb = -g * va * c - badm * va * s;
  const double dp_dd = g * t2 - badm * t1;
  const double dq_dva = badm * (vb * c - 2.0 * va) - g * vb * s;
  const double dq_dvb = badm * va * c - g * va * s;
  const double dq_dd = -badm * t2 - g * t1;

  jac(off + a, st.idx_v(t, a)) += dp_dva;
  jac(off + a, st.idx_v(t, b)) += dp_dvb;
  jac(off + a, st.idx_theta(t, a)) += dp_dd;
  jac(off + a, st.idx_theta(t, b)) -= dp_dd;
  jac(off + st.nb + a, st.idx_v(t, a)) += dq_dva;
  jac(off + st.nb + a, st.idx_v(t, b)) += dq_dvb;
  jac(off + st.nb + a, st.idx_theta(t, a)) += dq_dd;
  jac(off + st.nb + a, st.idx_theta(t, b)) -= dq_dd;
}

inline Matrix opf_eq_jacobian(const OpfStructure& st, const Vec& x) {
  Matrix jac(st.n_eq, st.n_vars, 0.0);
  for (int t = 0; t < st.T; ++t) {
    const int off = t * 2 * st.nb;
    for (int l = 0; l < st.nl; ++l) {
      const double g = st.pc.lines[l].g, b = st.pc.lines[l].b;
      add_flow_jacobian(st, jac, x, t, st.line_from[l], st.line_to[l], g, b);
      add_flow_jacobian(st, jac, x, t, st.line_to[l], st.line_from[l], g, b);
    }
    for (int g = 0; g < st.ng; ++g) {
      jac(off + st.gen_bus[g], st.idx_pg(t, g)) -= 1.0;
      jac(off + st.nb + st.gen_bus[g], st.idx_qg(t, g)) -= 1.0;
    }
    for (int e = 0; e < st.ne; ++e) jac(off + st.ess_bus[e], st.idx_pess(e, t)) += 1.0;
  }
  const double span = st.dt * st.pc.base_mva;
  for (int e = 0; e < st.ne; ++e) {
    for (int t = 0; t < st.T; ++t) {
      const int r = st.eq_energy_row(e, t);
      jac(r, st.idx_eess(e, t)) = 1.0;
      if (t > 0) jac(r, st.idx_eess(e, t - 1)) = -1.0;
      jac(r, st.idx_pess(e, t)) = -span;
    }
  }
  return jac;
}

// Second derivatives of wp*P_ab + wq*Q_ab over (Va, Vb, theta_a, theta_b),
// added into the Lagrangian Hessian.
inline void add_flow_hessian(const OpfStructure& st, Matrix& h, const Vec& x, int t, int a, int b,
                             double g, double badm, double wp, double wq) {
  if (wp == 0.0 && wq == 0.0) return;
  const double va = x[st.idx_v(t, a)], vb = x[st.idx_v(t, b)];
  const double d = x[st.idx_theta(t, a)] - x[st.idx_theta(t, b)];
  const double c = std::cos(d), s = std::sin(d);
  const double t1 = va * vb * c, t2 = va * vb * s;

  const double h_vava = wp * (2.0 * g) + wq * (-2.0 * badm);
  const double h_vavb = wp * (-g * c - badm * s) + wq * (badm * c - g * s);
  const double h_vad = wp * (g * vb * s - badm * vb * c) + wq * (-badm * vb * s - g * vb * c);
  const double h_vbd = wp * (g * va * s - badm * va * c) + wq * (-badm * va * s - g * va * c);
  const double h_dd = wp * (g * t1 + badm * t2) + wq * (g * t2 - badm * t1);

  const int iva = st.idx_v(t, a), ivb = st.idx_v(t, b);
  const int ita = st.idx_theta(t, a), itb = st.idx_theta(t, b);
  auto add = [&h](int r, int cidx, double v) {
    h(r, cidx) += v;
    if (r != cidx) h(cidx, r) += v;
  };
  add(iva, iva, h_vava);
  add(iva, ivb, h_vavb);
  add(iva, ita, h_vad);
  add(iva, itb, -h_vad);
  add(ivb, ita, h_vbd);
  add(ivb, itb, -h_vbd);
  add(ita, ita, h_dd);
  add(itb, itb, h_dd);
  add(ita, itb, -h_dd);
}

inline Matrix opf_lagrangian_hessian(const OpfStructure& st, const Vec& x, double sigma,
                                     const Vec& lam_eq) {
  const double base = st.pc.base_mva;
  Matrix h(st.n_vars, st.n_vars, 0.0);
  for (int t = 0; t < st.T; ++t) {
    for (int g = 0; g < st.ng; ++g)
      h(st.idx_pg(t, g), st.idx_pg(t, g)) +=
          sigma * st.alpha2 * 2.0 * st.pc.generators[g].cost_c2 * base * base;
    const int off = t * 2 * st.nb;
    for (int l = 0; l < st.nl; ++l) {
      const int i = st.line_from[l], j = st.line_to[l];
      const double g = st.pc.lines[l].g, b = st.pc.lines[l].b;
      add_flow_hessian(st, h, x, t, i, j, g, b, lam_eq[off + i], lam_eq[off + st.nb + i]);
      add_flow_hessian(st, h, x, t, j, i, g, b, lam_eq[off + j], lam_eq[off + st.nb + j]);
    }
  }
  for (int e = 0; e < st.ne; ++e) {
    const double w = st.pc.ess_units[st.active_ess[e]].degradation_weight;
    for (int t = 0; t < st.T; ++t)
      h(st.idx_pess(e, t), st.idx_pess(e, t)) += sigma * st.alpha3 * 2.0 * w * base * base;
  }
  return h;
}

inline NlpProblem build_problem(std::shared_ptr<const OpfStructure> stp) {
  const OpfStructure& st = *stp;
  const double base = st.pc.base_mva;
  NlpProblem p;
  p.n_vars = st.n_vars;
  p.n_eq = st.n_eq;
  p.n_ineq = st.n_ineq;
  p.lower.assign(st.n_vars, -kInf);
  p.upper.assign(st.n_vars, kInf);
  p.initial_point.assign(st.n_vars, 0.0);

  for (int t = 0; t < st.T; ++t) {
    p.lower[st.idx_theta(t, st.slack)] = 0.0;
    p.upper[st.idx_theta(t, st.slack)] = 0.0;
    for (int b = 0; b < st.nb; ++b) {
      const int iv = st.idx_v(t, b);
      if (b == st.slack) {
        p.lower[iv] = PowerCase::kV0;
        p.upper[iv] = PowerCase::kV0;
      } else {
        p.lower[iv] = st.pc.v_lo * PowerCase::kV0;
        p.upper[iv] = st.pc.v_hi * PowerCase::kV0;
      }
      p.initial_point[iv] = PowerCase::kV0;  // flat start
    }
    for (int g = 0; g < st.ng; ++g) {
      const auto& gen = st.pc.generators[g];
      const int ip = st.idx_pg(t, g), iq = st.idx_qg(t, g);
      if (st.gen_disabled(t, g)) {
        // tripped prime mover: no active power, but the machine stays
        // connected and keeps its reactive capability
        p.lower[ip] = p.upper[ip] = 0.0;
      } else {
        p.lower[ip] = gen.p_min / base;
        p.upper[ip] = gen.p_max / base;
        p.initial_point[ip] = 0.5 * (gen.p_min + gen.p_max) / base;
      }
      if (gen.q_min) p.lower[iq] = *gen.q_min / base;
      if (gen.q_max) p.upper[iq] = *gen.q_max / base;
      if (gen.q_min && gen.q_max) p.initial_point[iq] = 0.5 * (*gen.q_min + *gen.q_max) / base;
    }
  }
  for (int e = 0; e < st.ne; ++e) {
    const auto& unit = st.pc.ess_units[st.active_ess[e]];
    for (int t = 0; t < st.T; ++t) {
      p.lower[st.idx_pess(e, t)] = unit.p_min / base;
      p.upper[st.idx_pess(e, t)] = unit.p_max / base;
      p.lower[st.idx_eess(e, t)] = unit.e_min;
      p.upper[st.idx_eess(e, t)] = unit.e_max;
      p.initial_point[st.idx_eess(e, t)] = unit.e_initial;
    }
  }

  p.objective = [stp](const Vec& x) { return opf_objective(*stp, x); };
  p.objective_gradient = [stp](const Vec& x) { return opf_gradient(*stp, x); };
  p.eq_constraints = [stp](const Vec& x) { return opf_equalities(*stp, x); };
  p.eq_jacobian = [stp](const Vec& x) { return opf_eq_jacobian(*stp, x); };
  p.lagrangian_hessian = [stp](const Vec& x, double sigma, const Vec& lam, const Vec&) {
    return opf_lagrangian_hessian(*stp, x, sigma, lam);
  };
  return p;
}

inline std::shared_ptr<OpfStructure> make_structure(const PowerCase& pc, int T, double dt,
                                                    Vec load_scale, std::vector<int> active_ess,
                                                    std::vector<std::vector<int>> disabled_gens,
                                                    double alpha2, double alpha3) {
  pc.validate();
  if (T < 1) throw ValidationError("horizon must have at least one period");
  auto st = std::make_shared<OpfStructure>();
  st->pc = pc;
  st->T = T;
  st->dt = dt;
  st->load_scale = std::move(load_scale);
  st->active_ess = std::move(active_ess);
  disabled_gens.resize(T);
  st->disabled_gens = std::move(disabled_gens);
  st->alpha2 = alpha2;
  st->alpha3 = alpha3;
  for (int e : st->active_ess)
    if (e < 0 || e >= static_cast<int>(pc.ess_units.size()))
      throw ValidationError("active ESS index out of range");
  st->finish();
  return st;
}

inline DispatchResult extract_result(const OpfStructure& st, const NlpSolution& sol) {
  const double base = st.pc.base_mva;
  DispatchResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.objective_value = sol.objective_value;
  res.active_ess = st.active_ess;
  for (int t = 0; t < st.T; ++t) {
    Dispatch d;
    d.p_gen.resize(st.ng);
    d.q_gen.resize(st.ng);
    d.p_ess.resize(st.ne);
    for (int g = 0; g < st.ng; ++g) {
      d.p_gen[g] = base * sol.point[st.idx_pg(t, g)];
      d.q_gen[g] = base * sol.point[st.idx_qg(t, g)];
    }
    for (int e = 0; e < st.ne; ++e) d.p_ess[e] = base * sol.point[st.idx_pess(e, t)];
    NetworkState ns;
    ns.v.resize(st.nb);
    ns.theta.resize(st.nb);
    for (int b = 0; b < st.nb; ++b) {
      ns.v[b] = sol.point[st.idx_v(t, b)];
      ns.theta[b] = sol.point[st.idx_theta(t, b)];
    }
    res.total_cost += generation_cost(d, st.pc);
    res.periods.push_back(std::move(d));
    res.states.push_back(std::move(ns));
  }
  // lossless integrator e_{t+1} = e_t + P_t * dt, exact by construction
  res.ess_energy.resize(st.ne);
  for (int e = 0; e < st.ne; ++e) {
    double en = st.pc.ess_units[st.active_ess[e]].e_initial;
    for (int t = 0; t < st.T; ++t) {
      en += st.dt * res.periods[t].p_ess[e];
      res.ess_energy[e].push_back(en);
    }
  }

  // independent re-validation (not the solver's word)
  double mism = 0.0, bviol = 0.0;
  for (int t = 0; t < st.T; ++t) {
    auto [dp, dq] = nodal_mismatch(res.states[t], res.periods[t], st.pc, st.load_scale[t],
                                   st.active_ess);
    mism = std::max({mism, inf_norm(dp), inf_norm(dq)});
    for (int b = 0; b < st.nb; ++b) {
      const double v = res.states[t].v[b];
      if (b == st.slack) {
        bviol = std::max(bviol, std::abs(v - PowerCase::kV0));
        bviol = std::max(bviol, std::abs(res.states[t].theta[b]));
      } else {
        bviol = std::max(bviol, st.pc.v_lo - v);
        bviol = std::max(bviol, v - st.pc.v_hi);
      }
    }
    for (int g = 0; g < st.ng; ++g) {
      const auto& gen = st.pc.generators[g];
      const double ppu = res.periods[t].p_gen[g] / base;
      const double qpu = res.periods[t].q_gen[g] / base;
      if (st.gen_disabled(t, g)) {
        bviol = std::max(bviol, std::abs(ppu));
      } else {
        bviol = std::max(bviol, gen.p_min / base - ppu);
        bviol = std::max(bviol, ppu - gen.p_max / base);
      }
      if (gen.q_min) bviol = std::max(bviol, *gen.q_min / base - qpu);
      if (gen.q_max) bviol = std::max(bviol, qpu - *gen.q_max / base);
    }
    for (int e = 0; e < st.ne; ++e) {
      const auto& unit = st.pc.ess_units[st.active_ess[e]];
      const double ppu = res.periods[t].p_ess[e] / base;
      bviol = std::max(bviol, unit.p_min / base - ppu);
      bviol = std::max(bviol, ppu - unit.p_max / base);
      const double en = res.ess_energy[e][t];
      bviol = std::max(bviol, (unit.e_min - en) / base);
      bviol = std::max(bviol, (en - unit.e_max) / base);
    }
  }
  res.max_mismatch = mism;
  res.max_bound_violation = std::max(0.0, bviol);
  if (res.status == NlpStatus::Converged &&
      (res.max_mismatch > 1e-6 || res.max_bound_violation > 1e-8)) {
    res.status = NlpStatus::IterLimit;  // solver claim not confirmed
  }
  return res;
}

}  // namespace detail

inline NlpOptions default_opf_options() {
  NlpOptions o;
  o.tol = 1e-9;
  o.max_iters = 300;
  return o;
}

// Single-period OPF with flat-start initialization.
inline NlpProblem assemble_opf(const PowerCase& pc, double load_scale) {
  auto st = detail::make_structure(pc, 1, 1.0, Vec{load_scale}, {}, {}, 1.0, 1.0);
  return detail::build_problem(st);
}

inline DispatchResult solve_opf(const PowerCase& pc, double load_scale,
                                const NlpOptions& options = default_opf_options()) {
  auto st = detail::make_structure(pc, 1, 1.0, Vec{load_scale}, {}, {}, 1.0, 1.0);
  auto sol = solve_nlp(detail::build_problem(st), options);
  return detail::extract_result(*st, sol);
}

// Multi-period dispatch with storage coupling and per-period generator
// outages. active_ess indexes case.ess_units; disabled_gens[t] lists
// generator indices fixed to zero output in period t.
inline NlpProblem assemble_multiperiod(const PowerCase& pc, const Scenario& scenario,
                                       const std::vector<int>& active_ess,
                                       const std::vector<std::vector<int>>& disabled_gens) {
  scenario.validate();
  auto st = detail::make_structure(pc, scenario.periods, scenario.period_hours,
                                   scenario.load_scale, active_ess, disabled_gens,
                                   scenario.alpha2, scenario.alpha3);
  return detail::build_problem(st);
}

inline DispatchResult solve_multiperiod(const PowerCase& pc, const Scenario& scenario,
                                        const std::vector<int>& active_ess,
                                        const std::vector<std::vector<int>>& disabled_gens,
                                        const NlpOptions& options = default_opf_options()) {
  scenario.validate();
  auto st = detail::make_structure(pc, scenario.periods, scenario.period_hours,
                                   scenario.load_scale, active_ess, disabled_gens,
                                   scenario.alpha2, scenario.alpha3);
  auto sol = solve_nlp(detail::build_problem(st), options);
  return detail::extract_result(*st, sol);
}

}  // namespace gridres
