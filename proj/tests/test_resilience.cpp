#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "gridres/matpower.hpp"
#include "gridres/resilience.hpp"
#include "gridres/scenario.hpp"

using namespace gridres;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PowerCase load_case14() {
  return parse_matpower_case(read_file(std::string(GRIDRES_SOURCE_DIR) + "/data/case14.m"));
}

Scenario load_scenario14() {
  return parse_scenario(read_file(std::string(GRIDRES_SOURCE_DIR) + "/data/scenario_ieee14.scn"));
}

}  // namespace

TEST_CASE("resilience cost formula") {
  EssUnit ess{6, -30.0, 30.0, 0.0, 120.0, 60.0, 5.0, 1.0};

  SUBCASE("gated off when no replacement is deployed") {
    CHECK(resilience_cost(false, Vec{3.0, -4.0}, ess, 10.0) == 0.0);
  }
  SUBCASE("constants only with a zero profile") {
    ess.startup_cost = 5.0;
    CHECK(resilience_cost(true, Vec{0.0, 0.0}, ess, 10.0) == doctest::Approx(15.0));
  }
  SUBCASE("degradation sums squared power") {
    ess.startup_cost = 0.0;
    CHECK(resilience_cost(true, Vec{1.0, 1.0}, ess, 0.0) == doctest::Approx(2.0));
  }
}

TEST_CASE("neighborhood derivation on the 14-bus mirror") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.cyber_links.reset();
  auto graph = build_cyber_graph(pc, sc);

  auto nb = derive_neighborhood(graph, 6);
  CHECK(nb.candidates == std::vector<int>{5, 11, 12, 13});

  // leaf node 8 hangs off bus 7 only
  auto leaf = derive_neighborhood(graph, 8);
  CHECK(leaf.candidates == std::vector<int>{7});

  CHECK_THROWS_AS(derive_neighborhood(graph, 99), ValidationError);

  CyberGraph isolated;
  isolated.nodes = {1, 2};
  isolated.links = {};
  CHECK_THROWS_AS(derive_neighborhood(isolated, 1), ValidationError);
}

TEST_CASE("candidate evaluation removes the compromised node") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  auto graph = build_cyber_graph(pc, sc);
  TopologyProblem problem{graph, sc.critical_nodes, sc.root_node};

  auto eval = evaluate_candidate(problem, 6, 11, sc.cyber_costs, 1.0);
  REQUIRE(eval.feasible);
  CHECK(eval.replacement_deployed);
  CHECK(eval.rerouted_topology.active_nodes.count(6) == 0);
  for (auto [x, y] : eval.rerouted_topology.active_links) {
    CHECK(x != 6);
    CHECK(y != 6);
  }
  CHECK(eval.cyber_cost ==
        doctest::Approx(eval.rerouted_topology.total_cost + 3.0));  // alpha1=1, c~=3

  // a candidate reachable only through the compromised node is unusable
  TopologyProblem chain;
  chain.graph.nodes = {1, 2, 3};
  chain.graph.links = {{1, 2}, {2, 3}};
  for (int n : chain.graph.nodes) chain.graph.node_cost[n] = 1.0;
  for (auto l : chain.graph.links) chain.graph.link_cost[l] = 1.0;
  chain.critical = {1, 2};
  chain.root = 1;
  auto bad = evaluate_candidate(chain, 2, 3, sc.cyber_costs, 1.0);
  CHECK(!bad.feasible);
}

TEST_CASE("no-attack run degenerates to the baseline") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.attack.reset();
  sc.backup_ess.reset();
  sc.periods = 3;
  sc.load_scale = {0.9, 1.0, 1.05};

  auto rep = run_algorithm1(pc, sc);
  CHECK(!rep.chosen_candidate.has_value());
  CHECK(rep.f_res == 0.0);
  CHECK(!rep.replacement_deployed);
  REQUIRE(rep.baseline.periods.size() == 3);
  REQUIRE(rep.attacked.periods.size() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(std::memcmp(rep.attacked.periods[t].p_gen.data(), rep.baseline.periods[t].p_gen.data(),
                      rep.baseline.periods[t].p_gen.size() * sizeof(double)) == 0);
  }
  CHECK(rep.pre_attack_topology.active_links == rep.post_attack_topology.active_links);
  CHECK(rep.total_cost() ==
        doctest::Approx(rep.weighted_cyber() + rep.weighted_power()).epsilon(1e-12));
}

TEST_CASE("attack run: candidate 11, pinned generator, live storage") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 4;
  sc.load_scale = {0.9, 1.0, 1.0, 0.95};
  sc.attack->attack_period = 2;

  auto rep = run_algorithm1(pc, sc);
  REQUIRE(rep.baseline.status == NlpStatus::Converged);
  REQUIRE(rep.attacked.status == NlpStatus::Converged);
  REQUIRE(rep.chosen_candidate.has_value());
  CHECK(*rep.chosen_candidate == 11);

  // pre-attack periods bitwise identical
  for (int t = 0; t < 2; ++t) {
    CHECK(std::memcmp(rep.attacked.periods[t].p_gen.data(), rep.baseline.periods[t].p_gen.data(),
                      rep.baseline.periods[t].p_gen.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(rep.attacked.states[t].v.data(), rep.baseline.states[t].v.data(),
                      rep.baseline.states[t].v.size() * sizeof(double)) == 0);
  }
  // generator at bus 6 (index 3) produces nothing afterwards
  for (int t = 2; t < 4; ++t) CHECK(rep.attacked.periods[t].p_gen[3] == 0.0);
  // the compromised node is gone from the rerouted tree
  CHECK(rep.post_attack_topology.active_nodes.count(6) == 0);
  // the storage moves in at least one post-attack period
  bool storage_used = false;
  for (int t = 2; t < 4; ++t)
    if (std::abs(rep.attacked.periods[t].p_ess[0]) > 1e-3) storage_used = true;
  CHECK(storage_used);
  // cost decomposition is consistent
  CHECK(rep.total_cost() == doctest::Approx(rep.alpha1 * rep.f_cyber + rep.alpha2 * rep.f_power +
                                            rep.alpha3 * rep.f_res)
                                .epsilon(1e-12));
  // candidate optimality: the chosen cost is minimal among feasible ones
  const CandidateEvaluation* chosen_eval = nullptr;
  for (const auto& ev : rep.candidates)
    if (ev.candidate == *rep.chosen_candidate) chosen_eval = &ev;
  REQUIRE(chosen_eval != nullptr);
  for (const auto& ev : rep.candidates)
    if (ev.feasible) CHECK(chosen_eval->cyber_cost <= ev.cyber_cost + 1e-9);
}

TEST_CASE("attack at period zero re-optimizes the whole horizon") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 3;
  sc.load_scale = {0.95, 1.0, 0.9};
  sc.attack->attack_period = 0;

  auto rep = run_algorithm1(pc, sc);
  REQUIRE(rep.attacked.status == NlpStatus::Converged);
  for (int t = 0; t < 3; ++t) CHECK(rep.attacked.periods[t].p_gen[3] == 0.0);
  CHECK(rep.attacked.ess_energy[0].size() == 3);
}

TEST_CASE("report is independent of candidate evaluation concurrency") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 3;
  sc.load_scale = {0.9, 1.0, 0.95};
  sc.attack->attack_period = 1;

  CoordinatorOptions par;
  par.parallel_candidates = true;
  CoordinatorOptions ser;
  ser.parallel_candidates = false;

  auto a = run_algorithm1(pc, sc, par);
  auto b = run_algorithm1(pc, sc, ser);
  CHECK(*a.chosen_candidate == *b.chosen_candidate);
  CHECK(a.f_cyber == b.f_cyber);
  CHECK(a.f_power == b.f_power);
  CHECK(a.f_res == b.f_res);
  REQUIRE(a.attacked.periods.size() == b.attacked.periods.size());
  for (std::size_t t = 0; t < a.attacked.periods.size(); ++t)
    CHECK(std::memcmp(a.attacked.periods[t].p_gen.data(), b.attacked.periods[t].p_gen.data(),
                      a.attacked.periods[t].p_gen.size() * sizeof(double)) == 0);
}

TEST_CASE("alpha1 scaling leaves the chosen candidate unchanged") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 2;
  sc.load_scale = {0.9, 1.0};
  sc.attack->attack_period = 1;

  auto a = run_algorithm1(pc, sc);
  sc.alpha1 *= 10.0;
  auto b = run_algorithm1(pc, sc);
  CHECK(*a.chosen_candidate == *b.chosen_candidate);
}

TEST_CASE("alpha3 scaling never alters pre-attack periods") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 3;
  sc.load_scale = {0.9, 1.0, 0.95};
  sc.attack->attack_period = 1;

  auto a = run_algorithm1(pc, sc);
  sc.alpha3 *= 10.0;
  auto b = run_algorithm1(pc, sc);
  CHECK(std::memcmp(a.attacked.periods[0].p_gen.data(), b.attacked.periods[0].p_gen.data(),
                    a.attacked.periods[0].p_gen.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.attacked.states[0].v.data(), b.attacked.states[0].v.data(),
                    a.attacked.states[0].v.size() * sizeof(double)) == 0);
}

TEST_CASE("equal candidate costs break toward the smaller node id") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 2;
  sc.load_scale = {0.9, 1.0};
  sc.attack->attack_period = 1;
  sc.replacement_candidates = std::vector<int>{12, 13};
  // rerouting through 13 costs 27, through 12 costs 30; offset the
  // deployment costs so both candidates price out identically
  sc.cyber_costs.replacement_overrides[12] = 0.0;
  sc.cyber_costs.replacement_overrides[13] = 3.0;

  auto rep = run_algorithm1(pc, sc);
  REQUIRE(rep.candidates.size() == 2);
  REQUIRE(rep.candidates[0].feasible);
  REQUIRE(rep.candidates[1].feasible);
  CHECK(rep.candidates[0].cyber_cost == doctest::Approx(rep.candidates[1].cyber_cost));
  CHECK(*rep.chosen_candidate == 12);
}

TEST_CASE("attack in the final period leaves a one-period window") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();
  sc.periods = 3;
  sc.load_scale = {0.9, 1.0, 0.95};
  sc.attack->attack_period = 2;

  auto rep = run_algorithm1(pc, sc);
  REQUIRE(rep.attacked.status == NlpStatus::Converged);
  CHECK(rep.attacked.periods[2].p_gen[3] == 0.0);
  CHECK(std::abs(rep.attacked.periods[2].p_ess[0]) > 1e-3);
  for (int t = 0; t < 2; ++t)
    CHECK(std::memcmp(rep.attacked.periods[t].p_gen.data(), rep.baseline.periods[t].p_gen.data(),
                      rep.baseline.periods[t].p_gen.size() * sizeof(double)) == 0);
}

TEST_CASE("error taxonomy") {
  auto pc = load_case14();
  Scenario sc = load_scenario14();

  SUBCASE("compromised node outside the critical set") {
    sc.attack->compromised_cyber_node = 7;
    CHECK_THROWS_WITH_AS(run_algorithm1(pc, sc), doctest::Contains("critical"), ValidationError);
  }
  SUBCASE("compromised root is unsupported") {
    sc.attack->compromised_cyber_node = 1;
    CHECK_THROWS_WITH_AS(run_algorithm1(pc, sc), doctest::Contains("root"), ValidationError);
  }
  SUBCASE("no generator at the attacked bus") {
    sc.attack->disabled_generator_bus = 4;
    CHECK_THROWS_WITH_AS(run_algorithm1(pc, sc), doctest::Contains("no generator"),
                         ValidationError);
  }
  SUBCASE("all candidates infeasible") {
    // strand the candidates: only links through node 6 reach them
    sc.cyber_links = std::vector<std::pair<int, int>>{
        {1, 2}, {2, 3}, {1, 5}, {2, 4}, {4, 7}, {7, 8}, {5, 6}, {6, 11}, {6, 12}, {6, 13}};
    sc.replacement_candidates = std::vector<int>{11, 12, 13};
    CHECK_THROWS_WITH_AS(run_algorithm1(pc, sc), doctest::Contains("unrecoverable"),
                         ValidationError);
  }
}
