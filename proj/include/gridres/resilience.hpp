#pragma once

// Bi-level resilient operation: isolate a compromised cyber node, evaluate
// the neighboring replacement candidates in parallel against the rerouting
// MILP (upper level), then re-dispatch the physical system with the backup
// storage enabled and the attacked generator's active power pinned to zero
// for the post-attack periods (lower level). Pre-attack periods are reused
// from the no-attack solution untouched.

#include <future>
#include <optional>
#include <stdexcept>

#include "gridres/acopf.hpp"
#include "gridres/cyber.hpp"
#include "gridres/types.hpp"

namespace gridres {

// f_res = c~ * x + (c_ess + w * sum P^2) * x; zero when no replacement is
// deployed. Profile in MW, one entry per period.
inline double resilience_cost(bool replacement_deployed, const Vec& p_ess_profile_mw,
                              const EssUnit& ess, double replacement_deploy_cost) {
  if (!replacement_deployed) return 0.0;
  double degradation = 0.0;
  for (double p : p_ess_profile_mw) degradation += ess.degradation_weight * p * p;
  return replacement_deploy_cost + ess.startup_cost + degradation;
}

struct Neighborhood {
  int compromised = 0;
  std::vector<int> candidates;  // sorted, excludes the compromised node
};

inline Neighborhood derive_neighborhood(const CyberGraph& graph, int compromised) {
  if (!graph.has_node(compromised))
    throw ValidationError("compromised node " + std::to_string(compromised) +
                          " is not in the cyber graph");
  Neighborhood nb;
  nb.compromised = compromised;
  for (auto [a, b] : graph.links) {
    if (a == compromised) nb.candidates.push_back(b);
    if (b == compromised) nb.candidates.push_back(a);
  }
  std::sort(nb.candidates.begin(), nb.candidates.end());
  nb.candidates.erase(std::unique(nb.candidates.begin(), nb.candidates.end()),
                      nb.candidates.end());
  if (nb.candidates.empty())
    throw ValidationError("no replacement candidates for node " + std::to_string(compromised));
  return nb;
}

struct CandidateEvaluation {
  int candidate = 0;
  bool feasible = false;
  bool replacement_deployed = false;  // x~ flag
  double cyber_cost = 0.0;            // alpha1 * f_cyber + deployment cost
  TopologySolution rerouted_topology;
};

// Remove the compromised node and its links, swap the candidate into the
// critical set, and price the rerouted tree.
inline CandidateEvaluation evaluate_candidate(const TopologyProblem& problem, int compromised,
                                              int candidate, const CyberCostSpec& costs,
                                              double alpha1) {
  CandidateEvaluation eval;
  eval.candidate = candidate;
  eval.replacement_deployed = true;

  TopologyProblem reduced;
  for (int n : problem.graph.nodes)
    if (n != compromised) reduced.graph.nodes.push_back(n);
  for (auto [a, b] : problem.graph.links)
    if (a != compromised && b != compromised) reduced.graph.links.push_back({a, b});
  reduced.graph.node_cost = problem.graph.node_cost;
  reduced.graph.link_cost = problem.graph.link_cost;
  reduced.graph.node_cost.erase(compromised);
  reduced.critical = problem.critical;
  reduced.critical.erase(compromised);
  reduced.critical.insert(candidate);
  reduced.root = problem.root;

  auto sol = solve_milp(build_topology_milp(reduced));
  if (sol.status != TopoStatus::Optimal) {
    eval.feasible = false;  // candidate unusable, recorded not fatal
    return eval;
  }
  eval.feasible = true;
  eval.rerouted_topology = std::move(sol);
  eval.cyber_cost =
      alpha1 * eval.rerouted_topology.total_cost + costs.replacement_cost(candidate);
  return eval;
}

struct ResilienceReport {
  DispatchResult baseline;
  DispatchResult attacked;  // equals baseline when no attack is configured
  std::optional<int> chosen_candidate;
  std::vector<CandidateEvaluation> candidates;
  TopologySolution pre_attack_topology;
  TopologySolution post_attack_topology;
  bool replacement_deployed = false;

  double f_cyber = 0.0;
  double f_power = 0.0;
  double f_res = 0.0;
  double alpha1 = 1.0, alpha2 = 1.0, alpha3 = 1.0;

  double weighted_cyber() const { return alpha1 * f_cyber; }
  double weighted_power() const { return alpha2 * f_power; }
  double weighted_res() const { return alpha3 * f_res; }
  double total_cost() const { return weighted_cyber() + weighted_power() + weighted_res(); }
};

struct CoordinatorOptions {
  NlpOptions nlp = default_opf_options();
  bool parallel_candidates = true;
};

namespace detail {

inline DispatchResult solve_baseline(const PowerCase& pc, const Scenario& sc,
                                     const NlpOptions& nlp) {
  DispatchResult out;
  out.status = NlpStatus::Converged;
  for (int t = 0; t < sc.periods; ++t) {
    auto res = solve_opf(pc, sc.load_scale[t], nlp);
    if (res.status != NlpStatus::Converged) out.status = res.status;
    out.iterations += res.iterations;
    out.total_cost += res.total_cost;
    out.max_mismatch = std::max(out.max_mismatch, res.max_mismatch);
    out.max_bound_violation = std::max(out.max_bound_violation, res.max_bound_violation);
    out.periods.push_back(std::move(res.periods[0]));
    out.states.push_back(std::move(res.states[0]));
  }
  return out;
}

}  // namespace detail

// Algorithm: initialize the cyber topology, then either dispatch the
// physical system as-is (no attack) or isolate the compromised node,
// evaluate all replacement candidates concurrently, reroute, and re-solve
// the post-attack periods with the backup storage enabled.
inline ResilienceReport run_algorithm1(const PowerCase& original_case, const Scenario& scenario,
                                       const CoordinatorOptions& options = {}) {
  scenario.validate();
  PowerCase pc = original_case;
  int backup_ess_index = -1;
  if (scenario.backup_ess) {
    pc.ess_units.push_back(*scenario.backup_ess);
    backup_ess_index = static_cast<int>(pc.ess_units.size()) - 1;
  }
  pc.validate();

  ResilienceReport rep;
  rep.alpha1 = scenario.alpha1;
  rep.alpha2 = scenario.alpha2;
  rep.alpha3 = scenario.alpha3;

  // upper level, pre-attack: minimum-cost topology over the critical set
  CyberGraph graph = build_cyber_graph(pc, scenario);
  TopologyProblem problem{graph, scenario.critical_nodes, scenario.root_node};
  rep.pre_attack_topology = solve_milp(build_topology_milp(problem));
  if (rep.pre_attack_topology.status != TopoStatus::Optimal)
    throw ValidationError("pre-attack cyber topology is infeasible");

  rep.baseline = detail::solve_baseline(pc, scenario, options.nlp);

  if (!scenario.attack) {
    rep.attacked = rep.baseline;
    rep.post_attack_topology = rep.pre_attack_topology;
    rep.f_cyber = rep.pre_attack_topology.total_cost;
    rep.f_power = rep.baseline.total_cost;
    rep.f_res = 0.0;
    return rep;
  }

  const AttackSpec& attack = *scenario.attack;
  const int compromised = attack.compromised_cyber_node;
  if (!scenario.critical_nodes.count(compromised))
    throw ValidationError("compromised node " + std::to_string(compromised) +
                          " is not in the critical set");
  if (compromised == scenario.root_node)
    throw ValidationError("compromised node is the root; re-rooting is unsupported");

  // isolate the corrupted node, gather candidates
  std::vector<int> candidates;
  if (scenario.replacement_candidates) {
    candidates = *scenario.replacement_candidates;
  } else {
    candidates = derive_neighborhood(graph, compromised).candidates;
  }
  candidates.erase(std::remove(candidates.begin(), candidates.end(), compromised),
                   candidates.end());
  if (candidates.empty()) throw ValidationError("no replacement candidates");
  std::sort(candidates.begin(), candidates.end());

  rep.candidates.resize(candidates.size());
  auto evaluate_into = [&](std::size_t i) {
    rep.candidates[i] = evaluate_candidate(problem, compromised, candidates[i],
                                           scenario.cyber_costs, scenario.alpha1);
  };
  if (options.parallel_candidates) {
    std::vector<std::future<void>> futures;
    futures.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
      futures.push_back(std::async(std::launch::async, evaluate_into, i));
    for (auto& f : futures) f.get();
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) evaluate_into(i);
  }

  // deterministic reduction: least cyber cost, ties to the smaller node id
  const CandidateEvaluation* chosen = nullptr;
  for (const auto& ev : rep.candidates) {
    if (!ev.feasible) continue;
    if (!chosen || ev.cyber_cost < chosen->cyber_cost - 1e-12 ||
        (std::abs(ev.cyber_cost - chosen->cyber_cost) <= 1e-12 &&
         ev.candidate < chosen->candidate)) {
      chosen = &ev;
    }
  }
  if (!chosen) throw ValidationError("cyber layer unrecoverable: all candidates infeasible");
  rep.chosen_candidate = chosen->candidate;
  rep.post_attack_topology = chosen->rerouted_topology;
  rep.replacement_deployed = true;

  // lower level: re-optimize periods >= the attack period with the backup
  // storage at the compromised bus and the tripped generator at zero output
  std::vector<int> disabled_gens;
  for (std::size_t g = 0; g < pc.generators.size(); ++g)
    if (pc.generators[g].bus == attack.disabled_generator_bus)
      disabled_gens.push_back(static_cast<int>(g));
  if (disabled_gens.empty())
    throw ValidationError("no generator at bus " +
                          std::to_string(attack.disabled_generator_bus));

  const int a = attack.attack_period;
  const int window = scenario.periods - a;
  Scenario window_sc = scenario;
  window_sc.periods = window;
  window_sc.load_scale.assign(scenario.load_scale.begin() + a, scenario.load_scale.end());
  window_sc.attack.reset();

  std::vector<int> active_ess;
  if (backup_ess_index >= 0) active_ess.push_back(backup_ess_index);
  std::vector<std::vector<int>> disabled(window, disabled_gens);
  auto post = solve_multiperiod(pc, window_sc, active_ess, disabled, options.nlp);

  // merge: pre-attack periods are reused bitwise from the baseline
  rep.attacked.status = (rep.baseline.status == NlpStatus::Converged) ? post.status
                                                                      : rep.baseline.status;
  rep.attacked.iterations = rep.baseline.iterations + post.iterations;
  rep.attacked.active_ess = active_ess;
  rep.attacked.max_mismatch = std::max(rep.baseline.max_mismatch, post.max_mismatch);
  rep.attacked.max_bound_violation =
      std::max(rep.baseline.max_bound_violation, post.max_bound_violation);
  const int ne = static_cast<int>(active_ess.size());
  rep.attacked.ess_energy.assign(ne, {});
  for (int t = 0; t < a; ++t) {
    Dispatch d = rep.baseline.periods[t];
    d.p_ess.assign(ne, 0.0);  // the backup unit is not yet online
    rep.attacked.periods.push_back(std::move(d));
    rep.attacked.states.push_back(rep.baseline.states[t]);
    for (int e = 0; e < ne; ++e)
      rep.attacked.ess_energy[e].push_back(pc.ess_units[active_ess[e]].e_initial);
  }
  for (int t = 0; t < window; ++t) {
    rep.attacked.periods.push_back(std::move(post.periods[t]));
    rep.attacked.states.push_back(std::move(post.states[t]));
    for (int e = 0; e < ne; ++e)
      rep.attacked.ess_energy[e].push_back(post.ess_energy[e][t]);
  }
  for (int t = 0; t < scenario.periods; ++t)
    rep.attacked.total_cost += generation_cost(rep.attacked.periods[t], pc);

  rep.f_cyber = rep.post_attack_topology.total_cost;
  rep.f_power = rep.attacked.total_cost;
  if (backup_ess_index >= 0) {
    Vec profile;
    for (const auto& d : rep.attacked.periods)
      profile.push_back(d.p_ess.empty() ? 0.0 : d.p_ess[0]);
    rep.f_res = resilience_cost(true, profile, pc.ess_units[backup_ess_index],
                                scenario.cyber_costs.replacement_cost(chosen->candidate));
  } else {
    // replacement deployed without a backup unit: only the deployment cost
    rep.f_res = scenario.cyber_costs.replacement_cost(chosen->candidate);
  }
  return rep;
}

}  // namespace gridres
