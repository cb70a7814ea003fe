#pragma once

// Domain model for the cyber-physical test system: physical case data in
// per-unit on base_mva, plus the scenario layer (horizon, cyber set, attack,
// balancing coefficients). All types are plain values; validate() throws
// ValidationError and never leaves a half-checked object behind.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridres {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bus {
  int id = 0;
  bool is_slack = false;
};

// Series admittance of a line in per-unit: g = r/(r^2+x^2), b = -x/(r^2+x^2).
struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double g = 0.0;
  double b = 0.0;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;  // MW
  double p_max = 0.0;  // MW
  std::optional<double> q_min;  // MVAr; absent means free
  std::optional<double> q_max;
  double cost_c2 = 0.0;  // $/MW^2 h
  double cost_c1 = 0.0;  // $/MWh
  double cost_c0 = 0.0;  // $/h
};

struct Load {
  int bus = 0;
  double p_load = 0.0;  // MW
  double q_load = 0.0;  // MVAr
};

struct EssUnit {
  int bus = 0;
  double p_min = 0.0;   // MW, <= 0 (discharge limit)
  double p_max = 0.0;   // MW, >= 0 (charge limit)
  double e_min = 0.0;   // MWh
  double e_max = 0.0;   // MWh
  double e_initial = 0.0;
  double startup_cost = 0.0;        // $
  double degradation_weight = 0.0;  // $/(MW)^2 per period
};

struct PowerCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<EssUnit> ess_units;
  // Per-unit multipliers of the slack voltage V0 (normalized to 1.0 pu).
  double v_lo = 0.94;
  double v_hi = 1.06;

  static constexpr double kV0 = 1.0;

  int slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].is_slack) return static_cast<int>(i);
    throw ValidationError("power case has no slack bus");
  }

  // Dense internal index of an external bus id.
  int bus_index(int external_id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == external_id) return static_cast<int>(i);
    throw ValidationError("unknown bus " + std::to_string(external_id));
  }

  bool has_bus(int external_id) const {
    for (const auto& b : buses)
      if (b.id == external_id) return true;
    return false;
  }

  void validate() const {
    if (buses.empty()) throw ValidationError("power case has no buses");
    if (!(base_mva > 0.0)) throw ValidationError("base MVA must be positive");
    if (!(v_lo > 0.0) || !(v_lo < v_hi))
      throw ValidationError("voltage bounds must satisfy 0 < v_lo < v_hi");

    std::set<int> seen;
    int slack_count = 0;
    for (const auto& b : buses) {
      if (!seen.insert(b.id).second)
        throw ValidationError("duplicate bus " + std::to_string(b.id));
      if (b.is_slack) ++slack_count;
    }
    if (slack_count == 0) throw ValidationError("power case has no slack bus");
    if (slack_count > 1) throw ValidationError("power case has multiple slack buses");

    for (const auto& l : lines) {
      require_bus(l.from_bus);
      require_bus(l.to_bus);
      if (l.from_bus == l.to_bus)
        throw ValidationError("line endpoints coincide at bus " + std::to_string(l.from_bus));
      if (l.g == 0.0 && l.b == 0.0)
        throw ValidationError("line " + std::to_string(l.from_bus) + "-" +
                              std::to_string(l.to_bus) + " has zero admittance");
    }
    for (const auto& g : generators) {
      require_bus(g.bus);
      if (g.p_min > g.p_max)
        throw ValidationError("generator at bus " + std::to_string(g.bus) +
                              " has p_min > p_max");
      if (g.q_min && g.q_max && *g.q_min > *g.q_max)
        throw ValidationError("generator at bus " + std::to_string(g.bus) +
                              " has q_min > q_max");
      if (g.cost_c2 < 0.0)
        throw ValidationError("generator at bus " + std::to_string(g.bus) +
                              " has negative quadratic cost");
    }
    for (const auto& l : loads) require_bus(l.bus);
    for (const auto& e : ess_units) {
      require_bus(e.bus);
      if (!(e.p_min <= 0.0 && 0.0 <= e.p_max))
        throw ValidationError("ESS at bus " + std::to_string(e.bus) +
                              " must allow both charge and discharge (p_min <= 0 <= p_max)");
      if (!(e.e_min <= e.e_initial && e.e_initial <= e.e_max))
        throw ValidationError("ESS at bus " + std::to_string(e.bus) +
                              " initial energy outside [e_min, e_max]");
      if (e.degradation_weight < 0.0)
        throw ValidationError("ESS at bus " + std::to_string(e.bus) +
                              " has negative degradation weight");
    }
  }

 private:
  void require_bus(int id) const {
    if (!has_bus(id)) throw ValidationError("unknown bus " + std::to_string(id));
  }
};

struct AttackSpec {
  int attack_period = 0;           // 0-based period index
  int compromised_cyber_node = 0;  // cyber node id (mirrors bus ids)
  int disabled_generator_bus = 0;  // all generators at this bus shut down
};

// Cyber deployment costs: uniform defaults plus per-node / per-link overrides.
struct CyberCostSpec {
  double node_default = 0.0;
  double link_default = 0.0;
  double replacement_default = 0.0;
  std::map<int, double> node_overrides;
  std::map<std::pair<int, int>, double> link_overrides;
  std::map<int, double> replacement_overrides;

  double node_cost(int id) const {
    auto it = node_overrides.find(id);
    return it == node_overrides.end() ? node_default : it->second;
  }
  double link_cost(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = link_overrides.find({a, b});
    return it == link_overrides.end() ? link_default : it->second;
  }
  double replacement_cost(int id) const {
    auto it = replacement_overrides.find(id);
    return it == replacement_overrides.end() ? replacement_default : it->second;
  }
};

struct Scenario {
  int periods = 1;            // T
  double period_hours = 1.0;  // Delta t
  std::vector<double> load_scale;  // one multiplier per period
  std::set<int> critical_nodes;    // K
  int root_node = 0;
  std::optional<AttackSpec> attack;
  std::optional<EssUnit> backup_ess;  // enabled post-attack at the compromised bus
  double alpha1 = 1.0, alpha2 = 1.0, alpha3 = 1.0;
  CyberCostSpec cyber_costs;
  std::optional<std::vector<std::pair<int, int>>> cyber_links;  // default: mirror of lines
  std::optional<std::vector<int>> replacement_candidates;       // default: graph neighbors

  void validate() const {
    if (periods < 1) throw ValidationError("horizon must have at least one period");
    if (!(period_hours > 0.0)) throw ValidationError("period length must be positive");
    if (static_cast<int>(load_scale.size()) != periods)
      throw ValidationError("load_scale length must equal the number of periods");
    if (critical_nodes.empty()) throw ValidationError("critical node set is empty");
    if (!critical_nodes.count(root_node))
      throw ValidationError("root node " + std::to_string(root_node) +
                            " is not in the critical set");
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(alpha3 > 0.0))
      throw ValidationError("balancing coefficients must be positive");
    if (attack) {
      if (attack->attack_period < 0 || attack->attack_period >= periods)
        throw ValidationError("attack period out of range");
    }
  }
};

}  // namespace gridres
