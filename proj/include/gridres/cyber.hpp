#pragma once

// Flow-based minimum-cost cyber topology: a node-weighted Steiner tree MILP
// with single-commodity flow. One binary per candidate link drives two
// directed arcs (arcs into the root are omitted, making the root the unique
// source); critical nodes are fixed active. Solved exactly by depth-first
// branch-and-bound over the binaries with simplex LP bounding, plus an
// exhaustive oracle for small instances.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridres/lp.hpp"
#include "gridres/types.hpp"

namespace gridres {

struct CyberGraph {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> links;  // normalized a < b, unique
  std::map<int, double> node_cost;
  std::map<std::pair<int, int>, double> link_cost;

  bool has_node(int id) const {
    return std::find(nodes.begin(), nodes.end(), id) != nodes.end();
  }

  double cost_of_node(int id) const {
    auto it = node_cost.find(id);
    return it == node_cost.end() ? 0.0 : it->second;
  }

  double cost_of_link(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = link_cost.find({a, b});
    return it == link_cost.end() ? 0.0 : it->second;
  }

  void validate() const {
    std::set<int> seen(nodes.begin(), nodes.end());
    if (seen.size() != nodes.size()) throw ValidationError("duplicate cyber node");
    std::set<std::pair<int, int>> ls;
    for (auto [a, b] : links) {
      if (a == b) throw ValidationError("cyber self-loop at node " + std::to_string(a));
      if (a > b) std::swap(a, b);
      if (!seen.count(a) || !seen.count(b))
        throw ValidationError("cyber link references unknown node");
      if (!ls.insert({a, b}).second) throw ValidationError("duplicate cyber link");
    }
    for (const auto& [id, c] : node_cost)
      if (c < 0.0) throw ValidationError("negative node cost at " + std::to_string(id));
    for (const auto& [l, c] : link_cost)
      if (c < 0.0) throw ValidationError("negative link cost");
  }
};

struct TopologyProblem {
  CyberGraph graph;
  std::set<int> critical;  // K, must stay connected
  int root = 0;            // in K

  void validate() const {
    graph.validate();
    if (critical.empty()) throw ValidationError("critical set is empty");
    if (!critical.count(root)) throw ValidationError("root is not critical");
    for (int k : critical)
      if (!graph.has_node(k)) throw ValidationError("critical node not in graph");
  }
};

// Mirror of the physical line set: one cyber node per bus, one candidate
// link per line, costs resolved from the scenario's cost tables.
inline CyberGraph build_cyber_graph(const PowerCase& pc, const Scenario& sc) {
  CyberGraph g;
  for (const auto& b : pc.buses) g.nodes.push_back(b.id);
  std::sort(g.nodes.begin(), g.nodes.end());
  std::set<std::pair<int, int>> seen;
  if (sc.cyber_links) {
    for (auto [a, b] : *sc.cyber_links)
      if (seen.insert({std::min(a, b), std::max(a, b)}).second)
        g.links.push_back({std::min(a, b), std::max(a, b)});
  } else {
    for (const auto& l : pc.lines) {
      const int a = std::min(l.from_bus, l.to_bus);
      const int b = std::max(l.from_bus, l.to_bus);
      if (seen.insert({a, b}).second) g.links.push_back({a, b});
    }
  }
  std::sort(g.links.begin(), g.links.end());
  for (int n : g.nodes) g.node_cost[n] = sc.cyber_costs.node_cost(n);
  for (auto [a, b] : g.links) g.link_cost[{a, b}] = sc.cyber_costs.link_cost(a, b);
  g.validate();
  return g;
}

struct MilpArc {
  int from = 0;  // node index
  int to = 0;
  int link = 0;  // link index
};

// Solver-facing canonical form: binaries x per node and y per link, one
// continuous flow per directed arc, linear rows, big-M = |nodes|.
struct MilpModel {
  std::vector<int> node_ids;
  std::vector<std::pair<int, int>> link_ids;
  std::vector<MilpArc> arcs;
  int root_index = 0;
  std::vector<int> fixed_one;  // node indices with x pinned to 1 (the K set)
  double big_m = 0.0;

  // variable layout: [x (n) | y (m) | h (arcs)]
  int n_nodes() const { return static_cast<int>(node_ids.size()); }
  int n_links() const { return static_cast<int>(link_ids.size()); }
  int n_arcs() const { return static_cast<int>(arcs.size()); }
  int n_binaries() const { return n_nodes() + n_links(); }
  int n_vars() const { return n_nodes() + n_links() + n_arcs(); }
  int x_index(int node) const { return node; }
  int y_index(int link) const { return n_nodes() + link; }
  int h_index(int arc) const { return n_nodes() + n_links() + arc; }

  Vec objective;                 // length n_vars
  Matrix eq_rows;                // flow conservation
  Vec eq_rhs;
  Matrix ub_rows;                // capacity and activation rows
  Vec ub_rhs;
};

enum class TopoStatus { Optimal, Infeasible };

struct TopologySolution {
  TopoStatus status = TopoStatus::Infeasible;
  std::set<int> active_nodes;                    // external ids
  std::set<std::pair<int, int>> active_links;    // external ids, a < b
  std::map<std::pair<int, int>, double> flows;   // directed arcs, external ids
  double total_cost = 0.0;
  long explored_nodes = 0;
};

inline MilpModel build_topology_milp(const TopologyProblem& problem) {
  problem.validate();
  MilpModel m;
  m.node_ids = problem.graph.nodes;
  m.link_ids = problem.graph.links;
  std::map<int, int> index_of;
  for (int i = 0; i < m.n_nodes(); ++i) index_of[m.node_ids[i]] = i;
  m.root_index = index_of.at(problem.root);
  for (int k : problem.critical) m.fixed_one.push_back(index_of.at(k));
  std::sort(m.fixed_one.begin(), m.fixed_one.end());
  m.big_m = static_cast<double>(m.n_nodes());

  for (int l = 0; l < m.n_links(); ++l) {
    const int a = index_of.at(m.link_ids[l].first);
    const int b = index_of.at(m.link_ids[l].second);
    // arcs into the root are omitted: the root is the unique flow source
    if (b != m.root_index) m.arcs.push_back({a, b, l});
    if (a != m.root_index) m.arcs.push_back({b, a, l});
  }

  m.objective.assign(m.n_vars(), 0.0);
  for (int i = 0; i < m.n_nodes(); ++i)
    m.objective[m.x_index(i)] = problem.graph.cost_of_node(m.node_ids[i]);
  for (int l = 0; l < m.n_links(); ++l)
    m.objective[m.y_index(l)] =
        problem.graph.cost_of_link(m.link_ids[l].first, m.link_ids[l].second);

  // equalities: root outflow = sum(x) - 1; per non-root node inflow - outflow = x
  const int n_eq = m.n_nodes();
  m.eq_rows = Matrix(n_eq, m.n_vars(), 0.0);
  m.eq_rhs.assign(n_eq, 0.0);
  for (int a = 0; a < m.n_arcs(); ++a) {
    const auto& arc = m.arcs[a];
    if (arc.from == m.root_index) m.eq_rows(m.root_index, m.h_index(a)) += 1.0;
    if (arc.to != m.root_index) m.eq_rows(arc.to, m.h_index(a)) += 1.0;
    if (arc.from != m.root_index) m.eq_rows(arc.from, m.h_index(a)) -= 1.0;
  }
  for (int i = 0; i < m.n_nodes(); ++i) {
    if (i == m.root_index) {
      for (int j = 0; j < m.n_nodes(); ++j) m.eq_rows(i, m.x_index(j)) -= 1.0;
      m.eq_rhs[i] = -1.0;
    } else {
      m.eq_rows(i, m.x_index(i)) -= 1.0;
    }
  }

  // inequalities: h <= M y per arc; y <= x for both endpoints of each link
  const int n_ub = m.n_arcs() + 2 * m.n_links();
  m.ub_rows = Matrix(n_ub, m.n_vars(), 0.0);
  m.ub_rhs.assign(n_ub, 0.0);
  int r = 0;
  for (int a = 0; a < m.n_arcs(); ++a, ++r) {
    m.ub_rows(r, m.h_index(a)) = 1.0;
    m.ub_rows(r, m.y_index(m.arcs[a].link)) = -m.big_m;
  }
  std::map<int, int> idx;
  for (int i = 0; i < m.n_nodes(); ++i) idx[m.node_ids[i]] = i;
  for (int l = 0; l < m.n_links(); ++l) {
    m.ub_rows(r, m.y_index(l)) = 1.0;
    m.ub_rows(r, m.x_index(idx.at(m.link_ids[l].first))) = -1.0;
    ++r;
    m.ub_rows(r, m.y_index(l)) = 1.0;
    m.ub_rows(r, m.x_index(idx.at(m.link_ids[l].second))) = -1.0;
    ++r;
  }
  return m;
}

namespace detail {

// Connectivity check on the "still possible" graph: every required node must
// reach the root through nodes not fixed inactive and links not fixed off.
inline bool feasibility_check(const MilpModel& m, const std::vector<int>& fix) {
  const int n = m.n_nodes();
  std::vector<char> node_ok(n, 1);
  for (int i = 0; i < n; ++i) node_ok[i] = fix[m.x_index(i)] != 0;
  std::vector<std::vector<int>> adj(n);
  for (int l = 0; l < m.n_links(); ++l) {
    if (fix[m.y_index(l)] == 0) continue;
    // endpoints
    int a = -1, b = -1;
    for (int i = 0; i < n; ++i) {
      if (m.node_ids[i] == m.link_ids[l].first) a = i;
      if (m.node_ids[i] == m.link_ids[l].second) b = i;
    }
    if (node_ok[a] && node_ok[b]) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  }
  std::vector<char> reach(n, 0);
  std::vector<int> stack{m.root_index};
  reach[m.root_index] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!reach[w]) {
        reach[w] = 1;
        stack.push_back(w);
      }
  }
  for (int i : m.fixed_one)
    if (!reach[i]) return false;
  for (int i = 0; i < n; ++i)
    if (fix[m.x_index(i)] == 1 && !reach[i]) return false;
  for (int l = 0; l < m.n_links(); ++l)
    if (fix[m.y_index(l)] == 1) {
      // an activated link requires both endpoints reachable
      for (int i = 0; i < n; ++i) {
        if ((m.node_ids[i] == m.link_ids[l].first || m.node_ids[i] == m.link_ids[l].second) &&
            !reach[i])
          return false;
      }
    }
  return true;
}

// fix[] entries: -1 free, 0 fixed off, 1 fixed on
inline LinearProgram build_relaxation(const MilpModel& m, const std::vector<int>& fix) {
  LinearProgram lp;
  lp.n = m.n_vars();
  lp.c = m.objective;
  lp.a_eq = m.eq_rows;
  lp.b_eq = m.eq_rhs;
  lp.a_ub = m.ub_rows;
  lp.b_ub = m.ub_rhs;
  lp.lower.assign(lp.n, 0.0);
  lp.upper.assign(lp.n, kInf);
  for (int j = 0; j < m.n_binaries(); ++j) {
    lp.lower[j] = (fix[j] == 1) ? 1.0 : 0.0;
    lp.upper[j] = (fix[j] == 0) ? 0.0 : 1.0;
  }
  return lp;
}

inline LpSolution solve_relaxation(const MilpModel& m, const std::vector<int>& fix) {
  return solve_lp(build_relaxation(m, fix));
}

struct Incumbent {
  bool found = false;
  double cost = kInf;
  std::set<int> nodes;                        // node indices
  std::vector<int> links;                     // link indices, sorted
};

// Canonical tree from an integral relaxation point: keep the activated
// links, reduce to a spanning tree by cost-ordered Kruskal, then prune
// non-critical leaves. Returns nullopt when the active set is unusable.
inline std::optional<Incumbent> canonicalize(const MilpModel& m, const Vec& x) {
  const int n = m.n_nodes();
  std::set<int> active;
  for (int i = 0; i < n; ++i)
    if (x[m.x_index(i)] > 0.5) active.insert(i);
  if (!active.count(m.root_index)) return std::nullopt;

  std::map<int, int> idx;
  for (int i = 0; i < n; ++i) idx[m.node_ids[i]] = i;

  std::vector<int> chosen;
  for (int l = 0; l < m.n_links(); ++l)
    if (x[m.y_index(l)] > 0.5) chosen.push_back(l);

  // Kruskal over the chosen links, cheapest first, index as tie-break
  std::sort(chosen.begin(), chosen.end(), [&](int a, int b) {
    const double ca = m.objective[m.y_index(a)], cb = m.objective[m.y_index(b)];
    if (ca != cb) return ca < cb;
    return a < b;
  });
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<int> tree;
  for (int l : chosen) {
    const int a = idx.at(m.link_ids[l].first), b = idx.at(m.link_ids[l].second);
    if (!active.count(a) || !active.count(b)) return std::nullopt;
    const int ra = find(a), rb = find(b);
    if (ra == rb) continue;  // cycle: drop the redundant link
    parent[ra] = rb;
    tree.push_back(l);
  }
  // all active nodes must hang together
  const int root_rep = find(m.root_index);
  for (int i : active)
    if (find(i) != root_rep) return std::nullopt;

  // prune optional leaves (never critical ones) until the tree is tight
  std::set<int> critical(m.fixed_one.begin(), m.fixed_one.end());
  bool changed = true;
  std::vector<char> link_alive(m.n_links(), 0);
  for (int l : tree) link_alive[l] = 1;
  while (changed) {
    changed = false;
    std::map<int, int> degree;
    for (int i : active) degree[i] = 0;
    for (int l = 0; l < m.n_links(); ++l)
      if (link_alive[l]) {
        ++degree[idx.at(m.link_ids[l].first)];
        ++degree[idx.at(m.link_ids[l].second)];
      }
    for (int i : std::vector<int>(active.begin(), active.end())) {
      if (critical.count(i) || degree[i] != 1) continue;
      for (int l = 0; l < m.n_links(); ++l) {
        if (!link_alive[l]) continue;
        const int a = idx.at(m.link_ids[l].first), b = idx.at(m.link_ids[l].second);
        if (a == i || b == i) {
          link_alive[l] = 0;
          break;
        }
      }
      active.erase(i);
      changed = true;
    }
  }

  Incumbent inc;
  inc.found = true;
  inc.nodes = active;
  for (int l = 0; l < m.n_links(); ++l)
    if (link_alive[l]) inc.links.push_back(l);
  inc.cost = 0.0;
  for (int i : inc.nodes) inc.cost += m.objective[m.x_index(i)];
  for (int l : inc.links) inc.cost += m.objective[m.y_index(l)];
  return inc;
}

inline bool lexicographically_smaller(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Rooted flows over a canonical tree: each link carries the number of active
// nodes behind it, giving a witness that satisfies the flow rows exactly.
inline TopologySolution solution_from_incumbent(const MilpModel& m, const Incumbent& inc) {
  TopologySolution sol;
  sol.status = TopoStatus::Optimal;
  sol.total_cost = inc.cost;
  std::map<int, int> idx;
  for (int i = 0; i < m.n_nodes(); ++i) idx[m.node_ids[i]] = i;
  for (int i : inc.nodes) sol.active_nodes.insert(m.node_ids[i]);
  for (int l : inc.links) sol.active_links.insert(m.link_ids[l]);

  std::map<int, std::vector<int>> adj;  // node index -> neighbor node indices
  for (int l : inc.links) {
    const int a = idx.at(m.link_ids[l].first), b = idx.at(m.link_ids[l].second);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& [k, v] : adj) std::sort(v.begin(), v.end());

  // iterative post-order subtree counts from the root
  std::map<int, int> parent;
  std::vector<int> order;
  std::vector<int> stack{m.root_index};
  parent[m.root_index] = -1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int w : adj[v]) {
      if (!parent.count(w)) {
        parent[w] = v;
        stack.push_back(w);
      }
    }
  }
  std::map<int, int> subtree;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int count = 1;
    for (int w : adj[*it])
      if (parent.count(w) && parent.at(w) == *it) count += subtree.at(w);
    subtree[*it] = count;
  }
  for (const auto& [v, p] : parent) {
    if (p < 0) continue;
    sol.flows[{m.node_ids[p], m.node_ids[v]}] = static_cast<double>(subtree.at(v));
  }
  return sol;
}

}  // namespace detail

// Exact branch and bound: variables explored in fixed index order (nodes
// then links), branching one-first, LP bounding via the simplex relaxation.
// Equal-cost optima tie-break toward the lexicographically smallest active
// link set among the candidates the search surfaces.
inline TopologySolution solve_milp(const MilpModel& m) {
  std::vector<int> fix(m.n_binaries(), -1);
  for (int i : m.fixed_one) fix[m.x_index(i)] = 1;

  detail::Incumbent best;
  long explored = 0;
  const long node_cap = 2000000;

  auto consider = [&](const detail::Incumbent& cand) {
    if (!cand.found) return;
    if (cand.cost < best.cost - 1e-9 ||
        (best.found && std::abs(cand.cost - best.cost) <= 1e-9 &&
         detail::lexicographically_smaller(cand.links, best.links))) {
      best = cand;
      best.found = true;
    } else if (!best.found) {
      best = cand;
      best.found = true;
    }
  };

  std::map<int, int> node_index;
  for (int i = 0; i < m.n_nodes(); ++i) node_index[m.node_ids[i]] = i;

  std::function<void(std::vector<int>&)> dfs = [&](std::vector<int>& f) {
    if (++explored > node_cap)
      throw std::runtime_error("branch-and-bound node cap exceeded");

    // propagate link/endpoint implications to a fixed point
    std::vector<int> g = f;
    bool changed = true;
    while (changed) {
      changed = false;
      const auto& idx = node_index;
      for (int l = 0; l < m.n_links(); ++l) {
        const int y = m.y_index(l);
        const int xa = m.x_index(idx.at(m.link_ids[l].first));
        const int xb = m.x_index(idx.at(m.link_ids[l].second));
        if (g[y] == 1) {
          if (g[xa] == 0 || g[xb] == 0) return;  // contradiction
          if (g[xa] == -1) {
            g[xa] = 1;
            changed = true;
          }
          if (g[xb] == -1) {
            g[xb] = 1;
            changed = true;
          }
        }
        if ((g[xa] == 0 || g[xb] == 0) && g[y] == -1) {
          g[y] = 0;
          changed = true;
        }
      }
    }
    if (!detail::feasibility_check(m, g)) return;

    // every binary decided: price the leaf directly, no relaxation needed
    bool fully_fixed = true;
    for (int j = 0; j < m.n_binaries() && fully_fixed; ++j)
      if (g[j] == -1) fully_fixed = false;
    if (fully_fixed) {
      Vec xr(m.n_vars(), 0.0);
      for (int j = 0; j < m.n_binaries(); ++j) xr[j] = g[j];
      if (auto cand = detail::canonicalize(m, xr)) consider(*cand);
      return;
    }

    // The combinatorial check above is an exact feasibility oracle for this
    // model, so a relaxation that fails anyway is a numerical artifact;
    // retry on the interior-point path, and as a last resort keep branching
    // without a bound rather than risk pruning the optimum.
    auto rel = detail::solve_relaxation(m, g);
    if (rel.status != LpStatus::Optimal)
      rel = detail::solve_lp_via_interior_point(detail::build_relaxation(m, g));
    const bool have_bound = rel.status == LpStatus::Optimal;
    if (have_bound && best.found && rel.objective > best.cost + 1e-7) return;  // bound

    // first fractional binary in fixed index order
    int branch_var = -1;
    for (int j = 0; j < m.n_binaries(); ++j) {
      if (g[j] != -1) continue;
      if (!have_bound) {
        branch_var = j;  // no relaxation point; branch on the first free one
        break;
      }
      const double v = rel.x[j];
      if (v > 1e-6 && v < 1.0 - 1e-6) {
        branch_var = j;
        break;
      }
    }
    if (branch_var < 0) {
      // integral: round and canonicalize
      Vec xr = rel.x;
      for (int j = 0; j < m.n_binaries(); ++j) xr[j] = (xr[j] > 0.5) ? 1.0 : 0.0;
      if (auto cand = detail::canonicalize(m, xr)) consider(*cand);
      return;
    }
    g[branch_var] = 1;  // one-first
    dfs(g);
    g[branch_var] = 0;
    dfs(g);
  };

  dfs(fix);

  TopologySolution sol;
  sol.explored_nodes = explored;
  if (!best.found) {
    sol.status = TopoStatus::Infeasible;
    return sol;
  }
  sol = detail::solution_from_incumbent(m, best);
  sol.explored_nodes = explored;
  return sol;
}

// Exhaustive optimum for instances with at most 12 nodes: enumerate the
// optional-node subsets, span each candidate set with a cost-ordered
// Kruskal tree, keep the cheapest.
inline TopologySolution enumerate_oracle(const TopologyProblem& problem) {
  problem.validate();
  if (problem.graph.nodes.size() > 12)
    throw std::invalid_argument("enumerate_oracle: instance larger than 12 nodes");
  MilpModel m = build_topology_milp(problem);

  std::vector<int> optional;
  std::set<int> fixed(m.fixed_one.begin(), m.fixed_one.end());
  for (int i = 0; i < m.n_nodes(); ++i)
    if (!fixed.count(i)) optional.push_back(i);

  std::map<int, int> idx;
  for (int i = 0; i < m.n_nodes(); ++i) idx[m.node_ids[i]] = i;

  detail::Incumbent best;
  const int subsets = 1 << optional.size();
  for (int mask = 0; mask < subsets; ++mask) {
    std::set<int> active(fixed.begin(), fixed.end());
    for (std::size_t k = 0; k < optional.size(); ++k)
      if (mask & (1 << k)) active.insert(optional[k]);

    // minimum spanning tree of the induced subgraph
    std::vector<int> links;
    for (int l = 0; l < m.n_links(); ++l) {
      const int a = idx.at(m.link_ids[l].first), b = idx.at(m.link_ids[l].second);
      if (active.count(a) && active.count(b)) links.push_back(l);
    }
    std::sort(links.begin(), links.end(), [&](int a, int b) {
      const double ca = m.objective[m.y_index(a)], cb = m.objective[m.y_index(b)];
      if (ca != cb) return ca < cb;
      return a < b;
    });
    std::map<int, int> parent;
    for (int i : active) parent[i] = i;
    std::function<int(int)> find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    std::vector<int> tree;
    for (int l : links) {
      const int a = find(idx.at(m.link_ids[l].first)), b = find(idx.at(m.link_ids[l].second));
      if (a == b) continue;
      parent[a] = b;
      tree.push_back(l);
    }
    if (tree.size() + 1 != active.size()) continue;  // disconnected candidate set

    detail::Incumbent cand;
    cand.found = true;
    cand.nodes = active;
    std::sort(tree.begin(), tree.end());
    cand.links = tree;
    cand.cost = 0.0;
    for (int i : active) cand.cost += m.objective[m.x_index(i)];
    for (int l : tree) cand.cost += m.objective[m.y_index(l)];

    if (!best.found || cand.cost < best.cost - 1e-12 ||
        (std::abs(cand.cost - best.cost) <= 1e-12 &&
         detail::lexicographically_smaller(cand.links, best.links))) {
      best = cand;
    }
  }

  TopologySolution sol;
  if (!best.found) {
    sol.status = TopoStatus::Infeasible;
    return sol;
  }
  return detail::solution_from_incumbent(m, best);
}

struct TreeReport {
  bool pass = true;
  std::vector<std::string> failures;

  void fail(const std::string& msg) {
    pass = false;
    failures.push_back(msg);
  }
};

// Structural audit of a solution against the flow formulation: tree shape,
// activation logic, and conservation of the reported flows.
inline TreeReport verify_tree(const TopologySolution& sol, const TopologyProblem& problem) {
  TreeReport rep;
  if (sol.status != TopoStatus::Optimal) {
    rep.fail("solution not optimal");
    return rep;
  }
  const auto& g = problem.graph;

  for (int k : problem.critical)
    if (!sol.active_nodes.count(k))
      rep.fail("critical node " + std::to_string(k) + " inactive");

  for (auto [a, b] : sol.active_links) {
    if (!sol.active_nodes.count(a) || !sol.active_nodes.count(b))
      rep.fail("endpoint inactive on link " + std::to_string(a) + "-" + std::to_string(b));
    if (!std::count(g.links.begin(), g.links.end(), std::make_pair(a, b)))
      rep.fail("link " + std::to_string(a) + "-" + std::to_string(b) + " not a candidate");
  }

  if (sol.active_links.size() + 1 != sol.active_nodes.size())
    rep.fail("link count does not match active nodes minus one");

  // connectivity and acyclicity over active links
  {
    std::map<int, std::vector<int>> adj;
    for (auto [a, b] : sol.active_links) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::set<int> seen;
    std::vector<std::pair<int, int>> stack{{problem.root, -1}};
    bool cycle = false;
    seen.insert(problem.root);
    while (!stack.empty()) {
      auto [v, from] = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (w == from) continue;
        if (seen.count(w)) {
          cycle = true;
          continue;
        }
        seen.insert(w);
        stack.push_back({w, v});
      }
    }
    if (cycle) rep.fail("acyclic violated");
    for (int n : sol.active_nodes)
      if (!seen.count(n)) rep.fail("active node " + std::to_string(n) + " disconnected");
  }

  // flow conservation on the reported flows
  {
    const double big_m = static_cast<double>(g.nodes.size());
    std::map<int, double> net;  // inflow - outflow
    double root_out = 0.0, root_in = 0.0;
    for (const auto& [arc, h] : sol.flows) {
      if (h < -1e-9) rep.fail("negative flow");
      net[arc.second] += h;
      net[arc.first] -= h;
      if (arc.first == problem.root) root_out += h;
      if (arc.second == problem.root) root_in += h;
      const auto key = std::minmax(arc.first, arc.second);
      if (!sol.active_links.count({key.first, key.second}))
        rep.fail("flow on inactive link");
      if (h > big_m + 1e-9) rep.fail("flow exceeds big-M capacity");
    }
    if (root_in > 1e-9) rep.fail("root has inflow");
    const double expected = static_cast<double>(sol.active_nodes.size()) - 1.0;
    if (std::abs(root_out - expected) > 1e-6) rep.fail("root outflow mismatch");
    for (int n : sol.active_nodes) {
      if (n == problem.root) continue;
      if (std::abs(net[n] - 1.0) > 1e-6)
        rep.fail("flow balance violated at node " + std::to_string(n));
    }
  }
  return rep;
}

}  // namespace gridres
