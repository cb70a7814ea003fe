#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "gridres/cyber.hpp"
#include "gridres/matpower.hpp"

using namespace gridres;

namespace {

CyberGraph make_graph(std::vector<int> nodes, std::vector<std::pair<int, int>> links,
                      double node_cost, double link_cost) {
  CyberGraph g;
  g.nodes = std::move(nodes);
  g.links = std::move(links);
  for (int n : g.nodes) g.node_cost[n] = node_cost;
  for (auto l : g.links) g.link_cost[l] = link_cost;
  return g;
}

TopologyProblem random_problem(std::mt19937& rng) {
  std::uniform_int_distribution<int> un(2, 8);
  std::uniform_real_distribution<double> uc(0.0, 10.0);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  const int n = un(rng);
  TopologyProblem p;
  for (int i = 1; i <= n; ++i) {
    p.graph.nodes.push_back(i);
    p.graph.node_cost[i] = uc(rng);
  }
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      if (up(rng) < 0.5) {
        p.graph.links.push_back({a, b});
        p.graph.link_cost[{a, b}] = uc(rng);
      }
  std::uniform_int_distribution<int> uk(2, std::min(4, n));
  const int k = uk(rng);
  std::vector<int> shuffled = p.graph.nodes;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (int i = 0; i < k; ++i) p.critical.insert(shuffled[i]);
  p.root = *p.critical.begin();
  return p;
}

PowerCase load_case14() {
  std::ifstream in(std::string(GRIDRES_SOURCE_DIR) + "/data/case14.m");
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matpower_case(ss.str());
}

}  // namespace

TEST_CASE("model construction counts") {
  // two critical nodes joined by one candidate link; the root end has no
  // inflow arc, so a single directed arc remains
  TopologyProblem p;
  p.graph = make_graph({1, 2}, {{1, 2}}, 1.0, 1.0);
  p.critical = {1, 2};
  p.root = 1;
  auto m = build_topology_milp(p);
  CHECK(m.n_nodes() == 2);
  CHECK(m.n_links() == 1);
  CHECK(m.n_arcs() == 1);
  CHECK(m.fixed_one.size() == 2);
  CHECK(m.big_m == doctest::Approx(2.0));

  auto sol = solve_milp(m);
  REQUIRE(sol.status == TopoStatus::Optimal);
  CHECK(sol.total_cost == doctest::Approx(3.0));  // two nodes + one link
  CHECK(sol.active_links.count({1, 2}) == 1);
}

TEST_CASE("root outflow equals active nodes minus one") {
  // five critical nodes on a path: all active, root pushes 4 units
  TopologyProblem p;
  p.graph = make_graph({1, 2, 3, 4, 5}, {{1, 2}, {2, 3}, {3, 4}, {4, 5}}, 1.0, 1.0);
  p.critical = {1, 2, 3, 4, 5};
  p.root = 1;
  auto sol = solve_milp(build_topology_milp(p));
  REQUIRE(sol.status == TopoStatus::Optimal);
  double root_out = 0.0;
  for (const auto& [arc, h] : sol.flows)
    if (arc.first == 1) root_out += h;
  CHECK(root_out == doctest::Approx(4.0));
  CHECK(verify_tree(sol, p).pass);
}

TEST_CASE("steiner relay is used when the detour is cheaper") {
  // direct a-c costs 5; a-b-c costs 2+2 with relay cost 0.5
  TopologyProblem p;
  p.graph.nodes = {1, 2, 3};
  p.graph.links = {{1, 2}, {1, 3}, {2, 3}};
  p.graph.node_cost = {{1, 1.0}, {2, 0.5}, {3, 1.0}};
  p.graph.link_cost = {{{1, 2}, 2.0}, {{1, 3}, 5.0}, {{2, 3}, 2.0}};
  p.critical = {1, 3};
  p.root = 1;

  auto sol = solve_milp(build_topology_milp(p));
  REQUIRE(sol.status == TopoStatus::Optimal);
  CHECK(sol.total_cost == doctest::Approx(6.5));
  CHECK(sol.active_nodes == std::set<int>{1, 2, 3});
  CHECK(sol.active_links.count({1, 2}) == 1);
  CHECK(sol.active_links.count({2, 3}) == 1);

  auto oracle = enumerate_oracle(p);
  CHECK(oracle.total_cost == doctest::Approx(sol.total_cost));
}

TEST_CASE("disconnected critical set is infeasible on both paths") {
  TopologyProblem p;
  p.graph = make_graph({1, 2, 3}, {{2, 3}}, 1.0, 1.0);
  p.critical = {1, 3};
  p.root = 1;
  CHECK(solve_milp(build_topology_milp(p)).status == TopoStatus::Infeasible);
  CHECK(enumerate_oracle(p).status == TopoStatus::Infeasible);
}

TEST_CASE("oracle equivalence on seeded random instances") {
  std::mt19937 rng(20240811);
  int feasible = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto p = random_problem(rng);
    auto milp = solve_milp(build_topology_milp(p));
    auto oracle = enumerate_oracle(p);
    REQUIRE(milp.status == oracle.status);
    if (milp.status == TopoStatus::Optimal) {
      ++feasible;
      CHECK(milp.total_cost == doctest::Approx(oracle.total_cost).epsilon(1e-9));
      CHECK(verify_tree(milp, p).pass);
      CHECK(verify_tree(oracle, p).pass);
    }
  }
  CHECK(feasible > 10);  // the generator must produce real work
}

TEST_CASE("oracle equivalence holds up to the oracle size guard") {
  std::mt19937 rng(5150);
  std::uniform_int_distribution<int> un(9, 12);
  std::uniform_real_distribution<double> uc(0.0, 10.0);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = un(rng);
    TopologyProblem p;
    for (int i = 1; i <= n; ++i) {
      p.graph.nodes.push_back(i);
      p.graph.node_cost[i] = uc(rng);
    }
    for (int a = 1; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b)
        if (up(rng) < 0.35) {
          p.graph.links.push_back({a, b});
          p.graph.link_cost[{a, b}] = uc(rng);
        }
    p.critical = {1, n / 2, n};
    p.root = 1;
    auto milp = solve_milp(build_topology_milp(p));
    auto oracle = enumerate_oracle(p);
    REQUIRE(milp.status == oracle.status);
    if (milp.status == TopoStatus::Optimal) {
      CHECK(milp.total_cost == doctest::Approx(oracle.total_cost).epsilon(1e-9));
      CHECK(verify_tree(milp, p).pass);
    }
  }
}

TEST_CASE("raising the cost of an unused link changes nothing") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_problem(rng);
    auto sol = solve_milp(build_topology_milp(p));
    if (sol.status != TopoStatus::Optimal) continue;
    // find a candidate link that the optimum skipped
    std::pair<int, int> unused{-1, -1};
    for (auto l : p.graph.links)
      if (!sol.active_links.count(l)) {
        unused = l;
        break;
      }
    if (unused.first < 0) continue;
    auto p2 = p;
    p2.graph.link_cost[unused] += 123.0;
    auto sol2 = solve_milp(build_topology_milp(p2));
    REQUIRE(sol2.status == TopoStatus::Optimal);
    CHECK(sol2.total_cost == doctest::Approx(sol.total_cost).epsilon(1e-9));
  }
}

TEST_CASE("scaling all link costs preserves the argmin when node costs vanish") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 15; ++trial) {
    auto p = random_problem(rng);
    for (int n : p.graph.nodes) p.graph.node_cost[n] = 0.0;
    auto sol = solve_milp(build_topology_milp(p));
    if (sol.status != TopoStatus::Optimal) continue;
    auto p2 = p;
    for (auto& [l, c] : p2.graph.link_cost) c *= 7.5;
    auto sol2 = solve_milp(build_topology_milp(p2));
    REQUIRE(sol2.status == TopoStatus::Optimal);
    CHECK(sol2.active_links == sol.active_links);
    CHECK(sol2.total_cost == doctest::Approx(7.5 * sol.total_cost).epsilon(1e-9));
  }
}

TEST_CASE("determinism including tie-breaks") {
  // a diamond with identical costs everywhere: several optimal trees exist
  TopologyProblem p;
  p.graph = make_graph({1, 2, 3, 4}, {{1, 2}, {1, 3}, {2, 4}, {3, 4}}, 1.0, 1.0);
  p.critical = {1, 4};
  p.root = 1;
  auto a = solve_milp(build_topology_milp(p));
  auto b = solve_milp(build_topology_milp(p));
  REQUIRE(a.status == TopoStatus::Optimal);
  CHECK(a.active_nodes == b.active_nodes);
  CHECK(a.active_links == b.active_links);
  CHECK(a.flows == b.flows);
  CHECK(a.total_cost == b.total_cost);
  // the lexicographic rule picks the 1-2 / 2-4 path over 1-3 / 3-4
  CHECK(a.active_links.count({1, 2}) == 1);
  CHECK(a.active_links.count({2, 4}) == 1);
}

TEST_CASE("verify_tree flags mutated solutions") {
  TopologyProblem p;
  p.graph = make_graph({1, 2, 3, 4}, {{1, 2}, {2, 3}, {3, 4}, {1, 4}}, 1.0, 1.0);
  p.critical = {1, 3};
  p.root = 1;
  auto sol = solve_milp(build_topology_milp(p));
  REQUIRE(sol.status == TopoStatus::Optimal);
  REQUIRE(verify_tree(sol, p).pass);

  SUBCASE("inactive endpoint") {
    auto bad = sol;
    bad.active_links.insert({3, 4});  // node 4 is not active
    auto rep = verify_tree(bad, p);
    CHECK(!rep.pass);
    bool found = false;
    for (const auto& f : rep.failures)
      if (f.find("endpoint inactive") != std::string::npos) found = true;
    CHECK(found);
  }
  SUBCASE("cycle injection") {
    auto bad = sol;
    bad.active_nodes.insert(4);
    bad.active_links.insert({3, 4});
    bad.active_links.insert({1, 4});
    auto rep = verify_tree(bad, p);
    CHECK(!rep.pass);
    bool found = false;
    for (const auto& f : rep.failures)
      if (f.find("acyclic violated") != std::string::npos) found = true;
    CHECK(found);
  }
}

TEST_CASE("ieee 14-bus mirror graph builds and solves") {
  auto pc = load_case14();
  Scenario sc;
  sc.periods = 1;
  sc.period_hours = 1.0;
  sc.load_scale = {1.0};
  sc.critical_nodes = {1, 2, 3, 6, 8};
  sc.root_node = 1;
  sc.cyber_costs.node_default = 2.0;
  sc.cyber_costs.link_default = 1.0;

  auto g = build_cyber_graph(pc, sc);
  CHECK(g.nodes.size() == 14);
  CHECK(g.links.size() == 20);

  TopologyProblem p{g, sc.critical_nodes, sc.root_node};
  auto m = build_topology_milp(p);
  CHECK(m.n_links() == 20);

  auto sol = solve_milp(m);
  REQUIRE(sol.status == TopoStatus::Optimal);
  auto rep = verify_tree(sol, p);
  CHECK(rep.pass);
  for (int k : {1, 2, 3, 6, 8}) CHECK(sol.active_nodes.count(k) == 1);
}

TEST_CASE("oracle size guard") {
  TopologyProblem p;
  for (int i = 1; i <= 13; ++i) p.graph.nodes.push_back(i);
  for (int i = 1; i < 13; ++i) p.graph.links.push_back({i, i + 1});
  p.critical = {1, 13};
  p.root = 1;
  CHECK_THROWS_AS(enumerate_oracle(p), std::invalid_argument);
}
