#pragma once

// Batch front end: load a case and a scenario, run the study, emit tables.
// Exit codes: 0 success, 1 input or validation error, 2 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "gridres/matpower.hpp"
#include "gridres/report_io.hpp"
#include "gridres/resilience.hpp"
#include "gridres/scenario.hpp"

namespace gridres {

enum class RunMode { Baseline, Attack, Both };

struct RunConfig {
  std::string case_path;
  std::string scenario_path;
  std::string output_dir;
  RunMode mode = RunMode::Both;
  int verbosity = 0;
};

namespace detail {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedInputs {
  PowerCase pc;
  Scenario scenario;
};

inline LoadedInputs load_inputs(const std::string& case_path, const std::string& scenario_path,
                                int verbosity, std::ostream& err) {
  std::vector<std::string> warnings;
  LoadedInputs in;
  in.pc = parse_matpower_case(slurp(case_path), &warnings);
  in.scenario = parse_scenario(slurp(scenario_path));
  if (verbosity > 0)
    for (const auto& w : warnings) err << "warning: " << w << "\n";
  return in;
}

}  // namespace detail

inline int cmd_run(const RunConfig& config, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  if (config.case_path.empty() || config.scenario_path.empty() || config.output_dir.empty()) {
    err << "error: --case, --scenario and --out are required\n";
    return 1;
  }
  try {
    auto inputs = detail::load_inputs(config.case_path, config.scenario_path, config.verbosity,
                                      err);
    Scenario scenario = inputs.scenario;
    if (config.mode == RunMode::Baseline) {
      scenario.attack.reset();
      scenario.backup_ess.reset();
    }
    if (config.mode == RunMode::Attack && !scenario.attack) {
      err << "error: mode=attack but the scenario has no [attack] section\n";
      return 1;
    }

    CoordinatorOptions opts;
    auto rep = run_algorithm1(inputs.pc, scenario, opts);

    PowerCase effective = inputs.pc;
    if (scenario.backup_ess) effective.ess_units.push_back(*scenario.backup_ess);
    CyberGraph graph = build_cyber_graph(effective, scenario);
    const bool attacked_view = scenario.attack.has_value();
    auto bundle = build_result_bundle(rep, effective, scenario, graph, attacked_view);
    write_result_bundle(bundle, config.output_dir, attacked_view);

    if (config.verbosity > 0) {
      out << "baseline status: " << to_string(rep.baseline.status) << "\n";
      out << "attacked status: " << to_string(rep.attacked.status) << "\n";
      out << "total cost: " << format_double(rep.total_cost()) << "\n";
    }
    if (rep.baseline.status != NlpStatus::Converged ||
        rep.attacked.status != NlpStatus::Converged) {
      err << "error: dispatch solve did not converge (baseline="
          << to_string(rep.baseline.status) << ", attacked=" << to_string(rep.attacked.status)
          << ")\n";
      return 2;
    }
    return 0;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_validate(const std::string& case_path, const std::string& scenario_path,
                        std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    auto inputs = detail::load_inputs(case_path, scenario_path, 0, err);
    // cross-validate the cyber layer against the case without solving
    PowerCase effective = inputs.pc;
    if (inputs.scenario.backup_ess) effective.ess_units.push_back(*inputs.scenario.backup_ess);
    effective.validate();
    CyberGraph graph = build_cyber_graph(effective, inputs.scenario);
    TopologyProblem problem{graph, inputs.scenario.critical_nodes, inputs.scenario.root_node};
    problem.validate();
    if (inputs.scenario.attack) {
      const auto& at = *inputs.scenario.attack;
      if (!graph.has_node(at.compromised_cyber_node))
        throw ValidationError("compromised node is not a cyber node");
      bool has_gen = false;
      for (const auto& g : effective.generators)
        if (g.bus == at.disabled_generator_bus) has_gen = true;
      if (!has_gen)
        throw ValidationError("no generator at bus " +
                              std::to_string(at.disabled_generator_bus));
    }

    out << "buses=" << inputs.pc.buses.size() << " lines=" << inputs.pc.lines.size()
        << " gens=" << inputs.pc.generators.size() << "\n";
    out << "critical={";
    bool first = true;
    for (int k : inputs.scenario.critical_nodes) {
      if (!first) out << ",";
      out << k;
      first = false;
    }
    out << "} root=" << inputs.scenario.root_node << "\n";
    if (inputs.scenario.attack) {
      out << "attack: period=" << inputs.scenario.attack->attack_period
          << " cyber_node=" << inputs.scenario.attack->compromised_cyber_node
          << " generator_bus=" << inputs.scenario.attack->disabled_generator_bus << "\n";
    } else {
      out << "attack: none\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_topology(const std::string& case_path, const std::string& scenario_path,
                        const std::string& output_dir, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  try {
    auto inputs = detail::load_inputs(case_path, scenario_path, 0, err);
    CyberGraph graph = build_cyber_graph(inputs.pc, inputs.scenario);
    TopologyProblem problem{graph, inputs.scenario.critical_nodes, inputs.scenario.root_node};
    auto sol = solve_milp(build_topology_milp(problem));
    if (sol.status != TopoStatus::Optimal) {
      err << "error: cyber topology is infeasible for the given critical set\n";
      return 2;
    }
    std::filesystem::create_directories(output_dir);
    std::vector<std::string> rows;
    detail::topology_rows(sol, graph, rows);
    detail::write_csv(std::filesystem::path(output_dir) / "topology_pre.csv", "from,to,cost",
                      rows);
    out << "f_cyber=" << format_double(sol.total_cost) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gridres
