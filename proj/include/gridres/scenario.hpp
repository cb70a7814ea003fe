#pragma once

// Scenario file reader. Flat INI-style text with sections [horizon], [cyber],
// [costs], [alphas], [attack]; '#' starts a comment. Unknown sections or keys
// are errors so typos cannot silently change an experiment. The full key list
// is documented in docs/scenario_format.md.

#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gridres/types.hpp"

namespace gridres {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct ScenarioEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

class ScenarioReader {
 public:
  explicit ScenarioReader(std::string_view text) {
    static const std::set<std::string> known_sections = {"horizon", "cyber", "costs", "alphas",
                                                         "attack"};
    std::string section;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      const std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (!known_sections.count(section)) fail(line_no, "unknown section [" + section + "]");
        sections_.insert(section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(line_no, "expected key = value");
      if (section.empty()) fail(line_no, "key outside of a section");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) fail(line_no, "empty key or value");
      const std::string full = section + "." + key;
      if (entries_.count(full)) fail(line_no, "duplicate key '" + key + "'");
      entries_[full] = {value, line_no, false};
    }
  }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

  const ScenarioEntry* find(const std::string& section, const std::string& key) {
    auto it = entries_.find(section + "." + key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::string require(const std::string& section, const std::string& key) {
    const auto* e = find(section, key);
    if (!e) throw ParseError("missing required key '" + key + "' in section [" + section + "]");
    return e->value;
  }

  // Marks dotted override keys (prefix.<suffix>) as used and returns them.
  std::map<std::string, ScenarioEntry> overrides(const std::string& section,
                                                 const std::string& prefix) {
    std::map<std::string, ScenarioEntry> out;
    const std::string pat = section + "." + prefix + ".";
    for (auto& [full, e] : entries_) {
      if (full.rfind(pat, 0) == 0) {
        e.used = true;
        out[full.substr(pat.size())] = e;
      }
    }
    return out;
  }

  void reject_unused() const {
    for (const auto& [full, e] : entries_)
      if (!e.used) fail(e.line, "unknown key '" + full.substr(full.find('.') + 1) + "'");
  }

 private:
  [[noreturn]] static void fail(int line, const std::string& msg) {
    throw ParseError("line " + std::to_string(line) + ": " + msg);
  }

  std::map<std::string, ScenarioEntry> entries_;
  std::set<std::string> sections_;
};

inline double parse_num(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ParseError("invalid number '" + s + "' for " + what);
  return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
  const double v = parse_num(s, what);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) throw ParseError("expected an integer for " + what);
  return i;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::pair<int, int> parse_link(const std::string& s, const std::string& what) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw ParseError("expected <node>-<node> for " + what);
  int a = parse_int(trim(s.substr(0, dash)), what);
  int b = parse_int(trim(s.substr(dash + 1)), what);
  if (a == b) throw ParseError("self-loop link in " + what);
  if (a > b) std::swap(a, b);
  return {a, b};
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  using detail::parse_int;
  using detail::parse_num;
  detail::ScenarioReader rd(text);

  Scenario sc;
  sc.periods = parse_int(rd.require("horizon", "periods"), "periods");
  sc.period_hours = parse_num(rd.require("horizon", "period_hours"), "period_hours");
  if (const auto* e = rd.find("horizon", "load_scale")) {
    for (const auto& item : detail::split_list(e->value))
      sc.load_scale.push_back(parse_num(item, "load_scale"));
  } else {
    sc.load_scale.assign(std::max(sc.periods, 0), 1.0);
  }

  for (const auto& item : detail::split_list(rd.require("cyber", "critical")))
    sc.critical_nodes.insert(parse_int(item, "critical"));
  sc.root_node = parse_int(rd.require("cyber", "root"), "root");
  if (const auto* e = rd.find("cyber", "links")) {
    std::vector<std::pair<int, int>> links;
    for (const auto& item : detail::split_list(e->value))
      links.push_back(detail::parse_link(item, "links"));
    sc.cyber_links = links;
  }
  if (const auto* e = rd.find("cyber", "candidates")) {
    std::vector<int> cands;
    for (const auto& item : detail::split_list(e->value))
      cands.push_back(parse_int(item, "candidates"));
    sc.replacement_candidates = cands;
  }

  sc.cyber_costs.node_default = parse_num(rd.require("costs", "node_cost"), "node_cost");
  sc.cyber_costs.link_default = parse_num(rd.require("costs", "link_cost"), "link_cost");
  if (const auto* e = rd.find("costs", "replacement_cost"))
    sc.cyber_costs.replacement_default = parse_num(e->value, "replacement_cost");
  for (const auto& [suffix, e] : rd.overrides("costs", "node_cost"))
    sc.cyber_costs.node_overrides[parse_int(suffix, "node_cost override")] =
        parse_num(e.value, "node_cost override");
  for (const auto& [suffix, e] : rd.overrides("costs", "link_cost"))
    sc.cyber_costs.link_overrides[detail::parse_link(suffix, "link_cost override")] =
        parse_num(e.value, "link_cost override");
  for (const auto& [suffix, e] : rd.overrides("costs", "replacement_cost"))
    sc.cyber_costs.replacement_overrides[parse_int(suffix, "replacement_cost override")] =
        parse_num(e.value, "replacement_cost override");

  if (rd.has_section("alphas")) {
    if (const auto* e = rd.find("alphas", "alpha1")) sc.alpha1 = parse_num(e->value, "alpha1");
    if (const auto* e = rd.find("alphas", "alpha2")) sc.alpha2 = parse_num(e->value, "alpha2");
    if (const auto* e = rd.find("alphas", "alpha3")) sc.alpha3 = parse_num(e->value, "alpha3");
  }

  if (rd.has_section("attack")) {
    AttackSpec at;
    at.attack_period = parse_int(rd.require("attack", "period"), "period");
    at.compromised_cyber_node = parse_int(rd.require("attack", "cyber_node"), "cyber_node");
    at.disabled_generator_bus = parse_int(rd.require("attack", "generator_bus"), "generator_bus");
    sc.attack = at;

    const bool has_ess = rd.find("attack", "ess_bus") != nullptr;
    if (has_ess) {
      EssUnit ess;
      ess.bus = parse_int(rd.require("attack", "ess_bus"), "ess_bus");
      ess.p_min = parse_num(rd.require("attack", "ess_p_min"), "ess_p_min");
      ess.p_max = parse_num(rd.require("attack", "ess_p_max"), "ess_p_max");
      ess.e_min = parse_num(rd.require("attack", "ess_e_min"), "ess_e_min");
      ess.e_max = parse_num(rd.require("attack", "ess_e_max"), "ess_e_max");
      ess.e_initial = parse_num(rd.require("attack", "ess_e_initial"), "ess_e_initial");
      ess.startup_cost = parse_num(rd.require("attack", "ess_startup_cost"), "ess_startup_cost");
      ess.degradation_weight =
          parse_num(rd.require("attack", "ess_degradation_weight"), "ess_degradation_weight");
      sc.backup_ess = ess;
    }
  }

  rd.reject_unused();
  try {
    sc.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return sc;
}

}  // namespace gridres
