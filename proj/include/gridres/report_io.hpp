#pragma once

// Machine-readable outputs for a resilience study: one JSON summary plus
// plot-ready CSV tables (dispatch, storage, voltages, topology edge lists).
// Files are UTF-8 with \n line endings and shortest-round-trip floats, so
// identical inputs produce byte-identical bytes.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridres/format.hpp"
#include "gridres/resilience.hpp"

namespace gridres {

struct ResultBundle {
  std::vector<std::string> dispatch_rows;   // period,generator,p_mw,q_mvar
  std::vector<std::string> ess_rows;        // period,bus,p_mw,e_mwh
  std::vector<std::string> voltage_rows;    // period,bus,v_pu
  std::vector<std::string> topology_pre_rows;   // from,to,cost
  std::vector<std::string> topology_post_rows;  // from,to,cost
  nlohmann::ordered_json summary;
};

namespace detail {

inline void topology_rows(const TopologySolution& sol, const CyberGraph& graph,
                          std::vector<std::string>& rows) {
  for (auto [a, b] : sol.active_links) {
    rows.push_back(std::to_string(a) + "," + std::to_string(b) + "," +
                   format_double(graph.cost_of_link(a, b)));
  }
}

inline nlohmann::ordered_json topology_json(const TopologySolution& sol) {
  nlohmann::ordered_json j;
  j["cost"] = sol.total_cost;
  j["nodes"] = std::vector<int>(sol.active_nodes.begin(), sol.active_nodes.end());
  std::vector<std::string> links;
  for (auto [a, b] : sol.active_links)
    links.push_back(std::to_string(a) + "-" + std::to_string(b));
  j["links"] = links;
  return j;
}

}  // namespace detail

// dispatch.csv carries the run the study is about: the attacked trajectory
// when an attack is configured, the baseline otherwise.
inline ResultBundle build_result_bundle(const ResilienceReport& rep, const PowerCase& pc,
                                        const Scenario& scenario, const CyberGraph& graph,
                                        bool use_attacked) {
  ResultBundle out;
  const DispatchResult& run = use_attacked ? rep.attacked : rep.baseline;
  const int T = static_cast<int>(run.periods.size());

  for (int t = 0; t < T; ++t) {
    for (std::size_t g = 0; g < pc.generators.size(); ++g) {
      out.dispatch_rows.push_back(std::to_string(t) + "," + std::to_string(g) + "," +
                                  format_double(run.periods[t].p_gen[g]) + "," +
                                  format_double(run.periods[t].q_gen[g]));
    }
  }
  for (int t = 0; t < T; ++t) {
    for (std::size_t e = 0; e < run.active_ess.size(); ++e) {
      const auto& unit = pc.ess_units[run.active_ess[e]];
      out.ess_rows.push_back(std::to_string(t) + "," + std::to_string(unit.bus) + "," +
                             format_double(run.periods[t].p_ess[e]) + "," +
                             format_double(run.ess_energy[e][t]));
    }
  }
  for (int t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < pc.buses.size(); ++b) {
      out.voltage_rows.push_back(std::to_string(t) + "," + std::to_string(pc.buses[b].id) + "," +
                                 format_double(run.states[t].v[b]));
    }
  }
  detail::topology_rows(rep.pre_attack_topology, graph, out.topology_pre_rows);
  if (use_attacked && scenario.attack)
    detail::topology_rows(rep.post_attack_topology, graph, out.topology_post_rows);

  auto& j = out.summary;
  j["horizon"] = {{"periods", scenario.periods}, {"period_hours", scenario.period_hours}};
  j["status"] = {{"baseline", to_string(rep.baseline.status)},
                 {"attacked", to_string(rep.attacked.status)}};
  if (scenario.attack && use_attacked) {
    j["attack"] = {{"period", scenario.attack->attack_period},
                   {"cyber_node", scenario.attack->compromised_cyber_node},
                   {"generator_bus", scenario.attack->disabled_generator_bus}};
  } else {
    j["attack"] = nullptr;
  }
  if (rep.chosen_candidate && use_attacked)
    j["chosen_candidate"] = *rep.chosen_candidate;
  else
    j["chosen_candidate"] = nullptr;
  j["costs"] = {{"f_cyber", rep.f_cyber},
                {"f_power", rep.f_power},
                {"f_res", rep.f_res},
                {"alpha1", rep.alpha1},
                {"alpha2", rep.alpha2},
                {"alpha3", rep.alpha3},
                {"weighted_cyber", rep.weighted_cyber()},
                {"weighted_power", rep.weighted_power()},
                {"weighted_res", rep.weighted_res()},
                {"total", rep.total_cost()}};
  j["topology"]["pre"] = detail::topology_json(rep.pre_attack_topology);
  if (use_attacked && scenario.attack)
    j["topology"]["post"] = detail::topology_json(rep.post_attack_topology);
  if (use_attacked && scenario.attack) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& ev : rep.candidates) {
      nlohmann::ordered_json c;
      c["node"] = ev.candidate;
      c["feasible"] = ev.feasible;
      if (ev.feasible) c["cyber_cost"] = ev.cyber_cost;
      arr.push_back(c);
    }
    j["candidates"] = arr;
  }
  return out;
}

namespace detail {

inline void write_csv(const std::filesystem::path& path, const std::string& header,
                      const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header << "\n";
  for (const auto& r : rows) out << r << "\n";
}

}  // namespace detail

inline void write_result_bundle(const ResultBundle& bundle, const std::filesystem::path& dir,
                                bool include_post_topology) {
  std::filesystem::create_directories(dir);
  detail::write_csv(dir / "dispatch.csv", "period,generator,p_mw,q_mvar", bundle.dispatch_rows);
  detail::write_csv(dir / "ess.csv", "period,bus,p_mw,e_mwh", bundle.ess_rows);
  detail::write_csv(dir / "voltages.csv", "period,bus,v_pu", bundle.voltage_rows);
  detail::write_csv(dir / "topology_pre.csv", "from,to,cost", bundle.topology_pre_rows);
  if (include_post_topology)
    detail::write_csv(dir / "topology_post.csv", "from,to,cost", bundle.topology_post_rows);
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary.json");
  out << bundle.summary.dump(2) << "\n";
}

}  // namespace gridres
