// Copyright 2026 The bilevel-svr Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bilevel/export.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "bilevel/error.hpp"

namespace bilevel {

ExportFormat parse_export_format(std::string_view name) {
  if (name == "lp") return ExportFormat::kLp;
  if (name == "mps") return ExportFormat::kMps;
  throw Error(ErrorCode::kParse, "unknown export format '" + std::string(name) + "' (lp or mps)");
}

namespace {

// Shortest decimal text that reads back to the same double.
std::string num(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool lp_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("!\"#$%&()/,.;?@_`'{}|~").find(c) !=
                                                           std::string_view::npos;
}

// Names that a reader could take for a number.
bool needs_prefix(const std::string& s) {
  const auto digitish = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; };
  if (digitish(s[0])) return true;
  return (s[0] == 'e' || s[0] == 'E') && s.size() > 1 && (digitish(s[1]) || s[1] == 'e' || s[1] == 'E');
}

// Stable LP-safe names, unique after rewriting.
std::vector<std::string> lp_names(const SingleLevelModel& slm) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& v : slm.variables()) {
    std::string s = v.name.empty() ? "x" + std::to_string(v.id.index) : v.name;
    for (char& c : s) {
      if (!lp_char(c)) c = '_';
    }
    if (needs_prefix(s)) s = "_" + s;
    std::string base = s;
    for (int k = 1; used.count(s); ++k) s = base + "_" + std::to_string(k);
    used.insert(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::string row_name(const std::string& name, std::set<std::string>& used, char prefix, std::size_t index) {
  std::string s = name.empty() ? std::string(1, prefix) + std::to_string(index) : name;
  for (char& c : s) {
    if (!lp_char(c)) c = '_';
  }
  if (needs_prefix(s)) s = "_" + s;
  std::string base = s;
  for (int k = 1; used.count(s); ++k) s = base + "_" + std::to_string(k);
  used.insert(s);
  return s;
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::kLE: return "<=";
    case Sense::kGE: return ">=";
    case Sense::kEQ: return "=";
  }
  return "=";
}

// Emits space-separated tokens, wrapping before 200 columns.
class LineWriter {
 public:
  explicit LineWriter(std::ostream& out) : out_(out) {}
  void token(const std::string& t) {
    if (width_ > 1 && width_ + 1 + t.size() > 200) {
      out_ << "\n ";
      width_ = 1;
    }
    out_ << ' ' << t;
    width_ += 1 + t.size();
  }
  void end() {
    out_ << '\n';
    width_ = 0;
  }

 private:
  std::ostream& out_;
  std::size_t width_ = 0;
};

void write_terms(LineWriter& w, const std::vector<std::pair<double, std::string>>& terms, bool& first) {
  for (const auto& [c, name] : terms) {
    if (first) {
      w.token(c < 0 ? "-" + num(-c) : num(c));
    } else {
      w.token(c < 0 ? "-" : "+");
      w.token(num(std::abs(c)));
    }
    w.token(name);
    first = false;
  }
}

std::vector<std::pair<double, std::string>> affine_terms(const AffineExpr& e, const std::vector<std::string>& names) {
  std::vector<std::pair<double, std::string>> t;
  for (const auto& [v, c] : e.terms()) t.emplace_back(c, names[static_cast<std::size_t>(v.index)]);
  return t;
}

void write_affine(LineWriter& w, const AffineExpr& e, const std::vector<std::string>& names) {
  bool first = true;
  write_terms(w, affine_terms(e, names), first);
  if (first) {
    w.token("0");
    w.token(names.empty() ? "x" : names.front());
  }
}

}  // namespace

void write_lp(const SingleLevelModel& slm, std::ostream& out) {
  const auto names = lp_names(slm);
  std::set<std::string> used(names.begin(), names.end());
  LineWriter w(out);
  out << "\\ single-level reformulation: " << slm.num_variables() << " variables, " << slm.num_constraints()
      << " constraints, " << slm.sos1_sets().size() << " SOS1 sets\n";
  out << (slm.objective_sense() == ObjSense::kMin ? "Minimize\n" : "Maximize\n");
  w.token("obj:");
  write_affine(w, slm.objective(), names);
  if (slm.objective().constant() != 0.0) {
    w.token(slm.objective().constant() < 0 ? "-" : "+");
    w.token(num(std::abs(slm.objective().constant())));
  }
  w.end();

  out << "Subject To\n";
  std::size_t index = 0;
  for (const auto& row : slm.linear_constraints()) {
    w.token(row_name(row.name, used, 'c', index++) + ":");
    write_affine(w, row.body, names);
    w.token(sense_text(row.sense));
    w.token(num(row.rhs));
    w.end();
  }
  for (const auto& row : slm.quadratic_constraints()) {
    w.token(row_name(row.name, used, 'q', index++) + ":");
    bool first = true;
    write_terms(w, affine_terms(row.body.affine(), names), first);
    std::vector<std::pair<double, std::string>> quad;
    for (const auto& [key, c] : row.body.quad_terms()) {
      const std::string& a = names[static_cast<std::size_t>(key.first.index)];
      const std::string& b = names[static_cast<std::size_t>(key.second.index)];
      quad.emplace_back(c, key.first == key.second ? a + " ^ 2" : a + " * " + b);
    }
    if (!quad.empty()) {
      if (!first) w.token("+");
      w.token("[");
      bool qfirst = true;
      write_terms(w, quad, qfirst);
      w.token("]");
    } else if (first) {
      w.token("0");
      w.token(names.front());
    }
    w.token(sense_text(row.sense));
    w.token(num(row.rhs));
    w.end();
  }
  for (const auto& ind : slm.indicator_constraints()) {
    w.token(row_name(ind.name, used, 'i', index++) + ":");
    w.token(names[static_cast<std::size_t>(ind.binary.index)]);
    w.token("=");
    w.token(ind.active_value ? "1" : "0");
    w.token("->");
    write_affine(w, ind.body, names);
    w.token(sense_text(ind.sense));
    w.token(num(ind.rhs));
    w.end();
  }

  out << "Bounds\n";
  for (const auto& v : slm.variables()) {
    const std::string& n = names[static_cast<std::size_t>(v.id.index)];
    const double lb = v.lower_bound, ub = v.upper_bound;
    if (v.binary && lb == 0.0 && ub == 1.0) continue;
    if (lb == ub) {
      out << ' ' << n << " = " << num(lb) << '\n';
    } else if (!std::isfinite(lb) && !std::isfinite(ub)) {
      out << ' ' << n << " free\n";
    } else if (!std::isfinite(ub)) {
      out << ' ' << n << " >= " << num(lb) << '\n';
    } else {
      out << ' ' << (std::isfinite(lb) ? num(lb) : "-inf") << " <= " << n << " <= " << num(ub) << '\n';
    }
  }
  if (slm.num_binaries() > 0) {
    out << "Binaries\n";
    for (const auto& v : slm.variables()) {
      if (v.binary) out << ' ' << names[static_cast<std::size_t>(v.id.index)] << '\n';
    }
  }
  if (!slm.sos1_sets().empty()) {
    out << "SOS\n";
    for (const auto& set : slm.sos1_sets()) {
      w.token(row_name(set.name, used, 's', index++) + ":");
      w.token("S1");
      w.token("::");
      for (std::size_t k = 0; k < set.members.size(); ++k) {
        w.token(names[static_cast<std::size_t>(set.members[k].index)] + ":" + num(set.weights[k]));
      }
      w.end();
    }
  }
  out << "End\n";
}

void write_mps(const SingleLevelModel& slm, std::ostream& out) {
  if (!slm.quadratic_constraints().empty()) {
    throw Error(ErrorCode::kQuadraticUnsupported,
                "quadratic constraint '" + slm.quadratic_constraints().front().name + "' cannot be written as MPS");
  }
  auto code = [](char p, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%07zu", p, i + 1);
    return std::string(buf);
  };
  // Field layout: 2-3, 5-12, 15-22, 25-36; long numbers overflow field 4
  // and each record carries one entry, so the line stays token-separable.
  auto line = [&](std::string_view f1, std::string_view f2, std::string_view f3, std::string_view f4) {
    char buf[128];
    std::snprintf(buf, sizeof buf, " %-2.2s %-8.8s  %-8.8s  %s", std::string(f1).c_str(), std::string(f2).c_str(),
                  std::string(f3).c_str(), std::string(f4).c_str());
    std::string s(buf);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << '\n';
  };

  const std::size_t n = slm.num_variables();
  const auto& lin = slm.linear_constraints();
  const auto& inds = slm.indicator_constraints();
  const std::size_t m = lin.size() + inds.size();
  out << "* single-level reformulation, fixed MPS\n";
  for (const auto& v : slm.variables()) out << "* " << code('X', static_cast<std::size_t>(v.id.index)) << ' ' << v.name << '\n';
  for (std::size_t r = 0; r < lin.size(); ++r) out << "* " << code('R', r) << ' ' << lin[r].name << '\n';
  for (std::size_t r = 0; r < inds.size(); ++r) out << "* " << code('R', lin.size() + r) << ' ' << inds[r].name << '\n';
  for (std::size_t s = 0; s < slm.sos1_sets().size(); ++s) {
    out << "* " << code('S', s) << ' ' << slm.sos1_sets()[s].name << '\n';
  }
  out << "NAME          BILEVEL\n";
  if (slm.objective_sense() == ObjSense::kMax) out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n";
  line("N", "OBJ", "", "");
  auto row_type = [](Sense s) { return s == Sense::kLE ? "L" : s == Sense::kGE ? "G" : "E"; };
  for (std::size_t r = 0; r < lin.size(); ++r) line(row_type(lin[r].sense), code('R', r), "", "");
  for (std::size_t r = 0; r < inds.size(); ++r) line(row_type(inds[r].sense), code('R', lin.size() + r), "", "");

  // Column-major coefficients.
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(n);
  for (std::size_t r = 0; r < lin.size(); ++r) {
    for (const auto& [v, c] : lin[r].body.terms()) cols[static_cast<std::size_t>(v.index)].emplace_back(r + 1, c);
  }
  for (std::size_t r = 0; r < inds.size(); ++r) {
    for (const auto& [v, c] : inds[r].body.terms()) {
      cols[static_cast<std::size_t>(v.index)].emplace_back(lin.size() + r + 1, c);
    }
  }
  for (const auto& [v, c] : slm.objective().terms()) cols[static_cast<std::size_t>(v.index)].emplace_back(0, c);
  for (auto& col : cols) std::sort(col.begin(), col.end());

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool binary = slm.variables()[j].binary;
    if (binary != in_int) {
      char mk[16];
      std::snprintf(mk, sizeof mk, "M%07d", marker++);
      out << "    " << mk << "  'MARKER'                 " << (binary ? "'INTORG'" : "'INTEND'") << '\n';
      in_int = binary;
    }
    const std::string xn = code('X', j);
    if (cols[j].empty()) line("", xn, "OBJ", "0");
    for (const auto& [r, c] : cols[j]) line("", xn, r == 0 ? "OBJ" : code('R', r - 1), num(c));
  }
  if (in_int) {
    char mk[16];
    std::snprintf(mk, sizeof mk, "M%07d", marker);
    out << "    " << mk << "  'MARKER'                 'INTEND'\n";
  }

  out << "RHS\n";
  if (slm.objective().constant() != 0.0) line("", "RHS", "OBJ", num(-slm.objective().constant()));
  for (std::size_t r = 0; r < lin.size(); ++r) {
    if (lin[r].rhs != 0.0) line("", "RHS", code('R', r), num(lin[r].rhs));
  }
  for (std::size_t r = 0; r < inds.size(); ++r) {
    if (inds[r].rhs != 0.0) line("", "RHS", code('R', lin.size() + r), num(inds[r].rhs));
  }

  out << "BOUNDS\n";
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = slm.variables()[j];
    const std::string xn = code('X', j);
    const double lb = v.lower_bound, ub = v.upper_bound;
    if (v.binary && lb == 0.0 && ub == 1.0) {
      line("BV", "BND", xn, "");
    } else if (lb == ub) {
      line("FX", "BND", xn, num(lb));
    } else if (!std::isfinite(lb) && !std::isfinite(ub)) {
      line("FR", "BND", xn, "");
    } else {
      if (!std::isfinite(lb)) line("MI", "BND", xn, "");
      else if (lb != 0.0) line("LO", "BND", xn, num(lb));
      if (std::isfinite(ub)) line("UP", "BND", xn, num(ub));
    }
  }
  if (!slm.sos1_sets().empty()) {
    out << "SOS\n";
    for (std::size_t s = 0; s < slm.sos1_sets().size(); ++s) {
      const auto& set = slm.sos1_sets()[s];
      line("S1", "SOS", code('S', s), "");
      for (std::size_t k = 0; k < set.members.size(); ++k) {
        line("", code('S', s), code('X', static_cast<std::size_t>(set.members[k].index)), num(set.weights[k]));
      }
    }
  }
  if (!inds.empty()) {
    out << "INDICATORS\n";
    for (std::size_t r = 0; r < inds.size(); ++r) {
      line("IF", code('R', lin.size() + r), code('X', static_cast<std::size_t>(inds[r].binary.index)),
           inds[r].active_value ? "1" : "0");
    }
  }
  out << "ENDATA\n";
  (void)m;
}

void export_model(const SingleLevelModel& slm, ExportFormat format, const std::string& path) {
  // Render first so a construct error leaves no partial file behind.
  std::ostringstream text;
  if (format == ExportFormat::kLp) write_lp(slm, text);
  else write_mps(slm, text);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  file << text.str();
  if (!file) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// LP reader
// ---------------------------------------------------------------------------

namespace {

enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kSos, kEnd };

struct Token {
  std::string text;
  int line;
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::optional<Section> section_of(const std::string& raw) {
  const std::string s = lower(raw);
  if (s == "minimize" || s == "minimum" || s == "min" || s == "maximize" || s == "maximum" || s == "max") {
    return Section::kObjective;
  }
  if (s == "subject to" || s == "such that" || s == "st" || s == "s.t.") return Section::kConstraints;
  if (s == "bounds" || s == "bound") return Section::kBounds;
  if (s == "binaries" || s == "binary" || s == "bin") return Section::kBinaries;
  if (s == "sos") return Section::kSos;
  if (s == "end") return Section::kEnd;
  return std::nullopt;
}

bool is_sense(const std::string& t) {
  return t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">" || t == "=<" || t == "=>";
}

Sense to_sense(const std::string& t) {
  if (t == "<=" || t == "<" || t == "=<") return Sense::kLE;
  if (t == ">=" || t == ">" || t == "=>") return Sense::kGE;
  return Sense::kEQ;
}

std::optional<double> to_number(const std::string& t) {
  const std::string s = lower(t);
  if (s == "inf" || s == "+inf" || s == "infinity" || s == "+infinity") return kInf;
  if (s == "-inf" || s == "-infinity") return -kInf;
  double v = 0.0;
  const char* b = t.data();
  if (!t.empty() && t[0] == '+') ++b;
  const auto res = std::from_chars(b, t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

class LpReader {
 public:
  SingleLevelModel read(std::istream& in) {
    std::string raw;
    int line_no = 0;
    Section section = Section::kNone;
    std::vector<Token> pending;
    auto flush = [&](Section s) {
      if (s == Section::kObjective || s == Section::kConstraints || s == Section::kSos) entries(s, pending);
      pending.clear();
    };
    while (std::getline(in, raw)) {
      ++line_no;
      if (auto pos = raw.find('\\'); pos != std::string::npos) raw.erase(pos);
      std::string trimmed = raw;
      trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
      trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
      if (trimmed.empty()) continue;
      if (auto next = section_of(trimmed)) {
        flush(section);
        if (*next == Section::kObjective) maximize_ = lower(trimmed).rfind("max", 0) == 0;
        section = *next;
        if (section == Section::kEnd) break;
        continue;
      }
      std::istringstream ss(trimmed);
      std::vector<Token> toks;
      for (std::string t; ss >> t;) toks.push_back({t, line_no});
      switch (section) {
        case Section::kBounds: bound_line(toks); break;
        case Section::kBinaries:
          for (const auto& t : toks) binaries_.insert(var(t.text));
          break;
        case Section::kNone: fail(line_no, "content before the objective section");
        default: pending.insert(pending.end(), toks.begin(), toks.end());
      }
    }
    if (section != Section::kEnd) fail(line_no, "missing End");
    return build();
  }

 private:
  struct Row {
    std::string name;
    AffineExpr lin;
    QuadExpr quad;
    bool quadratic = false;
    Sense sense = Sense::kLE;
    double rhs = 0.0;
    std::optional<std::pair<VarId, bool>> indicator;
  };

  [[noreturn]] static void fail(int line, const std::string& what) {
    throw Error(ErrorCode::kParse, "LP line " + std::to_string(line) + ": " + what);
  }

  VarId var(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const VarId id{static_cast<std::int32_t>(order_.size())};
    order_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  static bool is_label(const std::string& t) { return t.size() > 1 && t.back() == ':' && t != "::"; }

  void entries(Section s, const std::vector<Token>& toks) {
    std::size_t i = 0;
    while (i < toks.size()) {
      std::size_t j = i + 1;
      while (j < toks.size() && !is_label(toks[j].text)) ++j;
      std::vector<Token> entry(toks.begin() + static_cast<std::ptrdiff_t>(i), toks.begin() + static_cast<std::ptrdiff_t>(j));
      if (!is_label(entry.front().text)) fail(entry.front().line, "expected 'name:'");
      const std::string name = entry.front().text.substr(0, entry.front().text.size() - 1);
      entry.erase(entry.begin());
      if (s == Section::kObjective) objective(name, entry);
      else if (s == Section::kConstraints) constraint(name, entry);
      else sos(name, entry);
      i = j;
    }
  }

  // Parses terms up to a sense token; returns its position.
  std::size_t expression(const std::vector<Token>& t, std::size_t i, Row& row, bool stop_at_sense) {
    double sign = 1.0;
    double coef = 1.0;
    bool has_coef = false;
    bool in_quad = false;
    for (; i < t.size(); ++i) {
      const std::string& s = t[i].text;
      if (stop_at_sense && is_sense(s)) return i;
      if (s == "+") continue;
      if (s == "-") {
        sign = -sign;
        continue;
      }
      if (s == "[") {
        in_quad = true;
        row.quadratic = true;
        continue;
      }
      if (s == "]") {
        in_quad = false;
        continue;
      }
      if (auto v = to_number(s); v && std::isfinite(*v)) {
        coef *= *v;
        has_coef = true;
        continue;
      }
      const double c = sign * coef;
      sign = 1.0;
      coef = 1.0;
      has_coef = false;
      const VarId a = var(s);
      if (in_quad) {
        if (i + 2 < t.size() && t[i + 1].text == "^" && t[i + 2].text == "2") {
          row.quad.add_quad_term(a, a, c);
          i += 2;
        } else if (i + 2 < t.size() && t[i + 1].text == "*") {
          row.quad.add_quad_term(a, var(t[i + 2].text), c);
          i += 2;
        } else {
          fail(t[i].line, "malformed quadratic term at '" + s + "'");
        }
      } else {
        row.lin.add_term(a, c);
      }
    }
    if (has_coef) row.lin.add_constant(sign * coef);
    return i;
  }

  void objective(const std::string& name, const std::vector<Token>& t) {
    obj_name_ = name;
    Row row;
    expression(t, 0, row, false);
    if (row.quadratic) fail(t.front().line, "quadratic objective is not supported");
    objective_ = row.lin;
  }

  void constraint(const std::string& name, const std::vector<Token>& t) {
    Row row;
    row.name = name;
    std::size_t i = 0;
    if (t.size() > 4 && t[1].text == "=" && t[3].text == "->") {
      const auto v = to_number(t[2].text);
      if (!v || (*v != 0.0 && *v != 1.0)) fail(t[2].line, "indicator value must be 0 or 1");
      row.indicator = std::make_pair(var(t[0].text), *v == 1.0);
      i = 4;
    }
    i = expression(t, i, row, true);
    if (i + 1 >= t.size()) fail(t.back().line, "constraint '" + name + "' lacks a sense and right-hand side");
    row.sense = to_sense(t[i].text);
    const auto rhs = to_number(t[i + 1].text);
    if (!rhs) fail(t[i + 1].line, "bad right-hand side '" + t[i + 1].text + "'");
    if (i + 2 != t.size()) fail(t[i + 2].line, "trailing tokens after constraint '" + name + "'");
    row.rhs = *rhs;
    rows_.push_back(std::move(row));
  }

  void sos(const std::string& name, const std::vector<Token>& t) {
    if (t.size() < 2 || lower(t[0].text) != "s1" || t[1].text != "::") fail(t.front().line, "expected 'S1 ::'");
    Sos1Set set;
    set.name = name;
    for (std::size_t i = 2; i < t.size(); ++i) {
      const auto pos = t[i].text.rfind(':');
      if (pos == std::string::npos) fail(t[i].line, "SOS member needs 'name:weight'");
      const auto w = to_number(t[i].text.substr(pos + 1));
      if (!w) fail(t[i].line, "bad SOS weight");
      set.members.push_back(var(t[i].text.substr(0, pos)));
      set.weights.push_back(*w);
    }
    sos_.push_back(std::move(set));
  }

  void bound_line(const std::vector<Token>& t) {
    auto set_bound = [&](const std::string& name, std::optional<double> lo, std::optional<double> hi) {
      auto& b = bounds_.try_emplace(var(name), 0.0, kInf).first->second;
      if (lo) b.first = *lo;
      if (hi) b.second = *hi;
    };
    if (t.size() == 2 && lower(t[1].text) == "free") {
      set_bound(t[0].text, -kInf, kInf);
    } else if (t.size() == 5 && is_sense(t[1].text) && is_sense(t[3].text)) {
      const auto lo = to_number(t[0].text), hi = to_number(t[4].text);
      if (!lo || !hi) fail(t[0].line, "bad bound values");
      set_bound(t[2].text, lo, hi);
    } else if (t.size() == 3 && is_sense(t[1].text)) {
      const auto v = to_number(t[2].text);
      const Sense s = to_sense(t[1].text);
      if (v) {
        if (s == Sense::kEQ) set_bound(t[0].text, v, v);
        else if (s == Sense::kGE) set_bound(t[0].text, v, std::nullopt);
        else set_bound(t[0].text, std::nullopt, v);
      } else if (const auto u = to_number(t[0].text)) {
        if (s == Sense::kEQ) set_bound(t[2].text, u, u);
        else if (s == Sense::kLE) set_bound(t[2].text, u, std::nullopt);
        else set_bound(t[2].text, std::nullopt, u);
      } else {
        fail(t[0].line, "bad bound");
      }
    } else {
      fail(t.empty() ? 0 : t[0].line, "unrecognized bound");
    }
  }

  SingleLevelModel build() {
    SingleLevelModel slm;
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const VarId id{static_cast<std::int32_t>(k)};
      const bool binary = binaries_.count(id) > 0;
      double lo = 0.0, hi = binary ? 1.0 : kInf;
      if (auto it = bounds_.find(id); it != bounds_.end()) std::tie(lo, hi) = it->second;
      slm.add_variable_with_id(id, order_[k], lo, hi, binary);
    }
    slm.set_objective(maximize_ ? ObjSense::kMax : ObjSense::kMin, objective_);
    for (auto& r : rows_) {
      if (r.indicator) {
        slm.add_indicator(r.indicator->first, r.indicator->second, r.lin, r.sense, r.rhs, r.name);
      } else if (r.quadratic) {
        QuadExpr body = r.quad;
        body += QuadExpr(r.lin);
        slm.add_quadratic(std::move(body), r.sense, r.rhs, r.name, QuadraticRole::kGeneral);
      } else {
        slm.add_linear(r.lin, r.sense, r.rhs, r.name);
      }
    }
    for (auto& s : sos_) slm.add_sos1(s.members, s.weights, s.name);
    return slm;
  }

  std::map<std::string, VarId> ids_;
  std::vector<std::string> order_;
  std::map<VarId, std::pair<double, double>> bounds_;
  std::set<VarId> binaries_;
  std::vector<Row> rows_;
  std::vector<Sos1Set> sos_;
  AffineExpr objective_;
  std::string obj_name_;
  bool maximize_ = false;
};

}  // namespace

SingleLevelModel read_lp(std::istream& in) { return LpReader().read(in); }

}  // namespace bilevel
