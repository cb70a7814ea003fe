#pragma once

// Reader/writer for the MATPOWER case subset used here: mpc.baseMVA, mpc.bus,
// mpc.branch, mpc.gen, mpc.gencost (polynomial model 2), '%' comments, plus a
// local mpc.ess extension table for storage units. Branch r/x is converted to
// series admittance; shunts, line charging, taps and phase shifts are parsed
// but ignored with a warning since the flow model covers series elements only.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gridres/format.hpp"
#include "gridres/types.hpp"

namespace gridres {

namespace detail {

struct MatTable {
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;
  int decl_line = 0;
};

struct MatScalar {
  double value = 0.0;
  int line = 0;
};

class MatpowerScanner {
 public:
  explicit MatpowerScanner(std::string_view text) : text_(text) {}

  void parse() {
    while (skip_blank()) {
      if (match_word("function")) {
        skip_to_newline();
        continue;
      }
      if (match_word("end")) continue;
      std::string name = read_field_name();
      skip_blank();
      expect('=');
      skip_blank();
      if (peek() == '[') {
        tables_[name] = read_table();
      } else if (peek() == '\'') {
        read_string();
        skip_blank();
        expect(';');
      } else {
        MatScalar s;
        s.line = line_;
        s.value = read_number();
        skip_blank();
        expect(';');
        scalars_[name] = s;
      }
    }
  }

  const MatTable* table(const std::string& name) const {
    auto it = tables_.find(name);
    return it == tables_.end() ? nullptr : &it->second;
  }
  const MatScalar* scalar(const std::string& name) const {
    auto it = scalars_.find(name);
    return it == scalars_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, MatTable>& tables() const { return tables_; }
  const std::map<std::string, MatScalar>& scalars() const { return scalars_; }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line_) + ": " + msg);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void advance() {
    if (pos_ < text_.size()) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  // Skips whitespace and % comments. Returns false at end of input.
  bool skip_blank() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '%') {
        while (pos_ < text_.size() && peek() != '\n') advance();
        continue;
      }
      return pos_ < text_.size();
    }
  }

  // Same but newline-sensitive: stops at '\n' (used inside tables).
  bool skip_inline_blank() {
    for (;;) {
      while (pos_ < text_.size() && peek() != '\n' &&
             std::isspace(static_cast<unsigned char>(peek())))
        advance();
      if (peek() == '%') {
        while (pos_ < text_.size() && peek() != '\n') advance();
        continue;
      }
      return pos_ < text_.size();
    }
  }

  void skip_to_newline() {
    while (pos_ < text_.size() && peek() != '\n') advance();
  }

  bool match_word(std::string_view word) {
    if (text_.substr(pos_, word.size()) != word) return false;
    const std::size_t after = pos_ + word.size();
    if (after < text_.size()) {
      const char c = text_[after];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') return false;
    }
    pos_ += word.size();
    return true;
  }

  std::string read_field_name() {
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        advance();
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a field name");
    std::string name(text_.substr(start, pos_ - start));
    if (name.rfind("mpc.", 0) != 0) fail("expected an mpc.<field> assignment, got '" + name + "'");
    return name.substr(4);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  void read_string() {
    expect('\'');
    while (pos_ < text_.size() && peek() != '\'') advance();
    expect('\'');
  }

  double read_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    while (text_.data() + pos_ != end) advance();
    return v;
  }

  MatTable read_table() {
    MatTable t;
    t.decl_line = line_;
    expect('[');
    std::vector<double> row;
    int row_line = line_;
    auto flush = [&]() {
      if (!row.empty()) {
        t.rows.push_back(row);
        t.line_numbers.push_back(row_line);
        row.clear();
      }
    };
    for (;;) {
      if (!skip_inline_blank()) fail("unterminated matrix");
      const char c = peek();
      if (c == '\n' || c == ';') {
        advance();
        flush();
        row_line = line_;
        continue;
      }
      if (c == ']') {
        advance();
        flush();
        break;
      }
      if (row.empty()) row_line = line_;
      row.push_back(read_number());
    }
    skip_blank();
    expect(';');
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, MatTable> tables_;
  std::map<std::string, MatScalar> scalars_;
};

inline void warn(std::vector<std::string>* sink, const std::string& msg) {
  if (sink) sink->push_back(msg);
}

}  // namespace detail

inline PowerCase parse_matpower_case(std::string_view text,
                                     std::vector<std::string>* warnings = nullptr) {
  detail::MatpowerScanner sc(text);
  sc.parse();

  auto need_table = [&](const char* name) -> const detail::MatTable& {
    const auto* t = sc.table(name);
    if (!t) throw ParseError(std::string("missing required table mpc.") + name);
    return *t;
  };
  auto row_error = [](const detail::MatTable& t, std::size_t i, const std::string& msg) {
    throw ParseError("line " + std::to_string(t.line_numbers[i]) + ": " + msg);
  };

  for (const auto& [name, t] : sc.tables()) {
    if (name != "bus" && name != "branch" && name != "gen" && name != "gencost" && name != "ess")
      detail::warn(warnings, "ignoring unsupported table mpc." + name);
  }
  for (const auto& [name, s] : sc.scalars()) {
    if (name != "baseMVA" && name != "version")
      detail::warn(warnings, "ignoring unsupported field mpc." + name);
  }

  PowerCase pc;
  const auto* base = sc.scalar("baseMVA");
  if (!base) throw ParseError("missing required field mpc.baseMVA");
  pc.base_mva = base->value;
  if (!(pc.base_mva > 0.0)) throw ParseError("mpc.baseMVA must be positive");

  const auto& bus_t = need_table("bus");
  double vmax_common = std::numeric_limits<double>::infinity();
  double vmin_common = -std::numeric_limits<double>::infinity();
  bool uniform_vbounds = true;
  double vmax_first = 0.0, vmin_first = 0.0;
  for (std::size_t i = 0; i < bus_t.rows.size(); ++i) {
    const auto& r = bus_t.rows[i];
    if (r.size() < 13) row_error(bus_t, i, "bus row needs 13 columns");
    Bus b;
    b.id = static_cast<int>(r[0]);
    const int type = static_cast<int>(r[1]);
    b.is_slack = (type == 3);
    if (pc.has_bus(b.id)) row_error(bus_t, i, "duplicate bus " + std::to_string(b.id));
    pc.buses.push_back(b);
    if (r[4] != 0.0 || r[5] != 0.0)
      detail::warn(warnings,
                   "bus " + std::to_string(b.id) + ": shunt element ignored (series model only)");
    if (r[2] != 0.0 || r[3] != 0.0) pc.loads.push_back(Load{b.id, r[2], r[3]});
    const double vmax = r[11], vmin = r[12];
    if (i == 0) {
      vmax_first = vmax;
      vmin_first = vmin;
    } else if (vmax != vmax_first || vmin != vmin_first) {
      uniform_vbounds = false;
    }
    vmax_common = std::min(vmax_common, vmax);
    vmin_common = std::max(vmin_common, vmin);
  }
  if (!uniform_vbounds)
    detail::warn(warnings, "non-uniform bus voltage limits; using the tightest common range");
  pc.v_lo = vmin_common;
  pc.v_hi = vmax_common;

  const auto& branch_t = need_table("branch");
  for (std::size_t i = 0; i < branch_t.rows.size(); ++i) {
    const auto& r = branch_t.rows[i];
    if (r.size() < 11) row_error(branch_t, i, "branch row needs 11 columns");
    const int from = static_cast<int>(r[0]);
    const int to = static_cast<int>(r[1]);
    if (!pc.has_bus(from)) row_error(branch_t, i, "unknown bus " + std::to_string(from));
    if (!pc.has_bus(to)) row_error(branch_t, i, "unknown bus " + std::to_string(to));
    if (from == to) row_error(branch_t, i, "branch endpoints coincide");
    const double res = r[2], reac = r[3];
    if (res == 0.0 && reac == 0.0) row_error(branch_t, i, "zero-impedance branch");
    if (static_cast<int>(r[10]) == 0) {
      detail::warn(warnings, "branch " + std::to_string(from) + "-" + std::to_string(to) +
                                 " out of service; skipped");
      continue;
    }
    if (r[4] != 0.0)
      detail::warn(warnings, "branch " + std::to_string(from) + "-" + std::to_string(to) +
                                 ": line charging ignored (series model only)");
    if (r[8] != 0.0 && r[8] != 1.0)
      detail::warn(warnings, "branch " + std::to_string(from) + "-" + std::to_string(to) +
                                 ": transformer tap ratio ignored");
    if (r[9] != 0.0)
      detail::warn(warnings, "branch " + std::to_string(from) + "-" + std::to_string(to) +
                                 ": phase shift ignored");
    const double denom = res * res + reac * reac;
    pc.lines.push_back(Line{from, to, res / denom, -reac / denom});
  }

  const auto& gen_t = need_table("gen");
  const auto& cost_t = need_table("gencost");
  if (cost_t.rows.size() != gen_t.rows.size())
    throw ParseError("mpc.gencost must have one row per generator");
  for (std::size_t i = 0; i < gen_t.rows.size(); ++i) {
    const auto& r = gen_t.rows[i];
    if (r.size() < 10) row_error(gen_t, i, "gen row needs 10 columns");
    const int bus = static_cast<int>(r[0]);
    if (!pc.has_bus(bus)) row_error(gen_t, i, "unknown bus " + std::to_string(bus));
    if (static_cast<int>(r[7]) == 0) {
      detail::warn(warnings, "generator at bus " + std::to_string(bus) + " out of service; skipped");
      continue;
    }
    Generator g;
    g.bus = bus;
    g.p_max = r[8];
    g.p_min = r[9];
    const double qmax = r[3], qmin = r[4];
    if (std::abs(qmax) < 1e9) g.q_max = qmax;
    if (std::abs(qmin) < 1e9) g.q_min = qmin;

    const auto& c = cost_t.rows[i];
    if (c.size() < 4) row_error(cost_t, i, "gencost row needs at least 4 columns");
    if (static_cast<int>(c[0]) != 2)
      row_error(cost_t, i, "unsupported cost model (only polynomial model 2)");
    const int ncost = static_cast<int>(c[3]);
    if (ncost < 1 || ncost > 3) row_error(cost_t, i, "polynomial cost degree must be <= 3 terms");
    if (c.size() < static_cast<std::size_t>(4 + ncost))
      row_error(cost_t, i, "gencost row shorter than its declared term count");
    if (ncost == 3) {
      g.cost_c2 = c[4];
      g.cost_c1 = c[5];
      g.cost_c0 = c[6];
    } else if (ncost == 2) {
      g.cost_c1 = c[4];
      g.cost_c0 = c[5];
    } else {
      g.cost_c0 = c[4];
    }
    pc.generators.push_back(g);
  }

  if (const auto* ess_t = sc.table("ess")) {
    for (std::size_t i = 0; i < ess_t->rows.size(); ++i) {
      const auto& r = ess_t->rows[i];
      if (r.size() < 8) row_error(*ess_t, i, "ess row needs 8 columns");
      const int bus = static_cast<int>(r[0]);
      if (!pc.has_bus(bus)) row_error(*ess_t, i, "unknown bus " + std::to_string(bus));
      pc.ess_units.push_back(EssUnit{bus, r[1], r[2], r[3], r[4], r[5], r[6], r[7]});
    }
  }

  try {
    pc.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return pc;
}

inline std::string serialize_case(const PowerCase& pc) {
  pc.validate();
  std::ostringstream out;
  auto num = [](double v) { return format_double(v); };

  out << "function mpc = case_export\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << num(pc.base_mva) << ";\n\n";

  out << "% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
  out << "mpc.bus = [\n";
  for (const auto& b : pc.buses) {
    double pd = 0.0, qd = 0.0;
    for (const auto& l : pc.loads) {
      if (l.bus == b.id) {
        pd += l.p_load;
        qd += l.q_load;
      }
    }
    out << "\t" << b.id << "\t" << (b.is_slack ? 3 : 1) << "\t" << num(pd) << "\t" << num(qd)
        << "\t0\t0\t1\t1\t0\t0\t1\t" << num(pc.v_hi) << "\t" << num(pc.v_lo) << ";\n";
  }
  out << "];\n\n";

  out << "% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
  out << "mpc.gen = [\n";
  for (const auto& g : pc.generators) {
    const double qmax = g.q_max ? *g.q_max : 1e10;
    const double qmin = g.q_min ? *g.q_min : -1e10;
    out << "\t" << g.bus << "\t0\t0\t" << num(qmax) << "\t" << num(qmin) << "\t1\t"
        << num(pc.base_mva) << "\t1\t" << num(g.p_max) << "\t" << num(g.p_min) << ";\n";
  }
  out << "];\n\n";

  out << "% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n";
  out << "mpc.branch = [\n";
  for (const auto& l : pc.lines) {
    const double y2 = l.g * l.g + l.b * l.b;
    const double r = l.g / y2;
    const double x = -l.b / y2;
    out << "\t" << l.from_bus << "\t" << l.to_bus << "\t" << num(r) << "\t" << num(x)
        << "\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n";
  }
  out << "];\n\n";

  out << "% model startup shutdown n c2 c1 c0\n";
  out << "mpc.gencost = [\n";
  for (const auto& g : pc.generators) {
    out << "\t2\t0\t0\t3\t" << num(g.cost_c2) << "\t" << num(g.cost_c1) << "\t" << num(g.cost_c0)
        << ";\n";
  }
  out << "];\n";

  if (!pc.ess_units.empty()) {
    out << "\n% bus Pmin Pmax Emin Emax Einit startup_cost degradation_weight\n";
    out << "mpc.ess = [\n";
    for (const auto& e : pc.ess_units) {
      out << "\t" << e.bus << "\t" << num(e.p_min) << "\t" << num(e.p_max) << "\t" << num(e.e_min)
          << "\t" << num(e.e_max) << "\t" << num(e.e_initial) << "\t" << num(e.startup_cost)
          << "\t" << num(e.degradation_weight) << ";\n";
    }
    out << "];\n";
  }
  return out.str();
}

}  // namespace gridres
