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

#include "bilevel/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "bilevel/error.hpp"
#include "bilevel/kkt.hpp"
#include "bilevel/refsolver.hpp"
#include "bilevel/svr.hpp"

namespace bilevel {

void BenchConfig::validate() const {
  if (instances.empty()) throw Error(ErrorCode::kParse, "config lists no instances");
  if (modes.empty()) throw Error(ErrorCode::kParse, "config lists no modes");
  if (!(time_limit_s >= 0.0)) throw Error(ErrorCode::kParse, "time_limit must be >= 0");
}

bool is_error_status(const std::string& status) { return status.rfind("Error", 0) == 0; }

void apply_blank_rules(BenchRecord& rec) {
  if (rec.solve_time_s >= rec.time_limit_s) rec.time_s.reset();
  if (!rec.bound || !rec.obj) rec.gap_pct.reset();
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Drops a trailing `#` comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

struct ConfigValue {
  std::vector<std::string> items;
  bool is_array = false;
  int line = 0;
};

[[noreturn]] void config_error(int line, const std::string& what) {
  throw Error(ErrorCode::kParse, "config line " + std::to_string(line) + ": " + what);
}

double as_number(const ConfigValue& v, const std::string& key) {
  if (v.is_array || v.items.size() != 1) config_error(v.line, key + " must be a number");
  const std::string& s = v.items.front();
  double out = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) config_error(v.line, key + ": bad number '" + s + "'");
  return out;
}

std::string as_string(const ConfigValue& v, const std::string& key) {
  if (v.is_array || v.items.size() != 1) config_error(v.line, key + " must be a single value");
  return v.items.front();
}

std::vector<std::string> as_list(const ConfigValue& v) { return v.items; }

}  // namespace

BenchConfig parse_config(std::istream& in) {
  static const std::set<std::string> kKeys = {"instances", "seeds", "modes",   "time_limit",    "big_m",
                                              "tau",       "bounds", "bits",   "noise",         "backend",
                                              "output",    "out_dir", "export_format"};
  std::map<std::string, ConfigValue> values;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!kKeys.count(key)) config_error(line_no, "unknown key '" + key + "'");
    if (values.count(key)) config_error(line_no, "duplicate key '" + key + "'");
    const std::string rhs = trim(std::string_view(line).substr(eq + 1));
    ConfigValue v;
    v.line = line_no;
    if (!rhs.empty() && rhs.front() == '[') {
      if (rhs.back() != ']') config_error(line_no, "unterminated array for '" + key + "'");
      v.is_array = true;
      std::stringstream items(rhs.substr(1, rhs.size() - 2));
      for (std::string item; std::getline(items, item, ',');) {
        item = trim(item);
        if (!item.empty()) v.items.push_back(unquote(item));
      }
    } else {
      if (rhs.empty()) config_error(line_no, "missing value for '" + key + "'");
      v.items.push_back(unquote(rhs));
    }
    values.emplace(key, std::move(v));
  }

  auto get = [&](const std::string& key) -> const ConfigValue* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };

  BenchConfig cfg;
  double big_m = 100.0, tau = 1e-9, bounds = 100.0;
  int bits = 8;
  if (auto* v = get("time_limit")) cfg.time_limit_s = as_number(*v, "time_limit");
  if (auto* v = get("big_m")) big_m = as_number(*v, "big_m");
  if (auto* v = get("tau")) tau = as_number(*v, "tau");
  if (auto* v = get("bounds")) bounds = as_number(*v, "bounds");
  if (auto* v = get("bits")) bits = static_cast<int>(as_number(*v, "bits"));
  if (auto* v = get("noise")) cfg.noise = as_number(*v, "noise");
  if (auto* v = get("out_dir")) cfg.out_dir = as_string(*v, "out_dir");
  if (auto* v = get("backend")) {
    const auto s = as_string(*v, "backend");
    if (s == "internal") cfg.backend = Backend::kInternal;
    else if (s == "export") cfg.backend = Backend::kExportOnly;
    else config_error(v->line, "backend must be internal or export");
  }
  if (auto* v = get("output")) {
    const auto s = as_string(*v, "output");
    if (s == "markdown") cfg.output = OutputFormat::kMarkdown;
    else if (s == "csv") cfg.output = OutputFormat::kCsv;
    else config_error(v->line, "output must be markdown or csv");
  }
  if (auto* v = get("export_format")) cfg.export_format = parse_export_format(as_string(*v, "export_format"));
  cfg.expansion = ExpansionParams{-bounds, bounds, bits};

  std::vector<std::uint64_t> seeds = {42};
  if (auto* v = get("seeds")) {
    seeds.clear();
    for (const auto& s : as_list(*v)) {
      std::uint64_t seed = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) config_error(v->line, "bad seed '" + s + "'");
      seeds.push_back(seed);
    }
  }
  if (auto* v = get("instances")) {
    for (const auto& name : as_list(*v)) {
      const auto [samples, features] = parse_instance_name(name);
      for (auto seed : seeds) cfg.instances.push_back({samples, features, seed});
    }
  }
  if (auto* v = get("modes")) {
    for (const auto& name : as_list(*v)) cfg.modes.push_back(parse_mode(name, big_m, tau));
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

std::string file_stem(const BenchInstance& inst, const Mode& mode) {
  std::string name = instance_name(inst.samples, inst.features);
  std::replace(name.begin(), name.end(), '/', '-');
  return name + "_s" + std::to_string(inst.seed) + "_" + mode.name();
}

}  // namespace

BenchRecord run_cell(const BenchConfig& cfg, const BenchInstance& inst, const Mode& mode, KktResidual* residual) {
  BenchRecord rec;
  rec.instance = instance_name(inst.samples, inst.features);
  rec.seed = inst.seed;
  rec.mode = mode.name();
  rec.time_limit_s = cfg.time_limit_s;
  if (mode.kind == Mode::Kind::kBigM) {
    rec.primal_m = mode.primal_m;
    rec.dual_m = mode.dual_m;
  }
  if (mode.kind == Mode::Kind::kProduct) rec.tau = mode.tau;
  const auto expansion = mode.needs_expansion() ? cfg.expansion.value_or(ExpansionParams{}) : std::optional<ExpansionParams>();
  if (expansion) rec.bits = expansion->bits;

  try {
    const auto svr = build_bilevel(generate_instance(inst.samples, inst.features, inst.seed, cfg.noise));
    const auto kkt = build_kkt(svr.model);
    const auto info = reformulate(svr.model, kkt, mode, expansion);

    if (cfg.backend == Backend::kExportOnly) {
      const char* ext = cfg.export_format == ExportFormat::kLp ? ".lp" : ".mps";
      const auto path = std::filesystem::path(cfg.out_dir) / (file_stem(inst, mode) + ext);
      export_model(info.slm, cfg.export_format, path.string());
      rec.status = "Exported";
      return rec;
    }

    SolveOptions opts;
    opts.time_limit_s = cfg.time_limit_s;
    auto result = solve_bnb(info.slm, opts);
    if (mode.kind == Mode::Kind::kBigM) check_bigm_tightness(result, info);
    rec.status = result.status == SolveStatus::kError ? "Error: " + result.message : to_string(result.status);
    rec.obj = result.objective;
    rec.gap_pct = result.gap_pct;
    rec.bound = result.bound;
    rec.solve_time_s = result.time_s;
    rec.time_s = result.time_s;
    rec.nodes = result.nodes;
    apply_blank_rules(rec);
    for (const auto& w : result.warnings) rec.warnings.push_back(w.message);
    if (residual && result.point) {
      Assignment lower(kkt.num_variables());
      for (std::size_t i = 0; i < kkt.num_variables(); ++i) {
        const VarId v{static_cast<std::int32_t>(i)};
        lower.set(v, result.point->get(v));
      }
      *residual = kkt_residual(kkt, lower);
    }
  } catch (const std::exception& e) {
    rec.status = std::string("Error: ") + e.what();
  } catch (...) {
    rec.status = "Error: unknown failure";
  }
  return rec;
}

std::vector<BenchRecord> run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  if (cfg.backend == Backend::kExportOnly) std::filesystem::create_directories(cfg.out_dir);
  std::vector<BenchRecord> records;
  records.reserve(cfg.instances.size() * cfg.modes.size());
  for (const auto& inst : cfg.instances) {
    for (const auto& mode : cfg.modes) records.push_back(run_cell(cfg, inst, mode));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  // "-0.00" and "-0" read as zero.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string cell(const std::optional<double>& v, int decimals) { return v ? fixed(*v, decimals) : "-"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string inst_label(const BenchRecord& r, bool with_seed) {
  return with_seed ? r.instance + " s" + std::to_string(r.seed) : r.instance;
}

std::string markdown(const std::vector<BenchRecord>& records) {
  std::set<std::uint64_t> seeds;
  for (const auto& r : records) seeds.insert(r.seed);
  const bool with_seed = seeds.size() > 1;

  std::vector<std::string> modes;
  for (const auto& r : records) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  std::ostringstream out;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::vector<std::array<std::string, 4>> rows = {{"Inst", "Obj", "Gap", "Time"}};
    std::vector<std::string> notes;
    for (const auto& r : records) {
      if (r.mode != modes[m]) continue;
      rows.push_back({inst_label(r, with_seed), cell(r.obj, 2), cell(r.gap_pct, 0), cell(r.time_s, 0)});
      if (r.status != "Optimal") notes.push_back(inst_label(r, with_seed) + ": " + r.status);
      for (const auto& w : r.warnings) notes.push_back(inst_label(r, with_seed) + ": " + w);
    }
    std::array<std::size_t, 4> width{};
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
    }
    auto emit = [&](const std::array<std::string, 4>& row) {
      out << '|';
      for (std::size_t c = 0; c < 4; ++c) {
        out << ' ' << std::string(width[c] - row[c].size(), ' ') << row[c] << " |";
      }
      out << '\n';
    };
    if (m) out << '\n';
    out << "## " << modes[m] << "\n\n";
    emit(rows.front());
    out << '|';
    for (std::size_t c = 0; c < 4; ++c) out << ' ' << std::string(width[c] - 1, '-') << ": |";
    out << '\n';
    for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
    out << "\nTime in seconds (s), Gap in percent (%).\n";
    if (!notes.empty()) {
      out << '\n';
      for (const auto& n : notes) out << "- " << n << '\n';
    }
  }
  return out.str();
}

std::string csv(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << "instance,seed,mode,obj,gap,time,status,warnings,obj_full,bound_full,gap_full,nodes,"
         "gap_formula,bits,primal_m,dual_m,tau,time_limit\n";
  for (const auto& r : records) {
    const std::vector<std::string> fields = {
        r.instance,
        std::to_string(r.seed),
        r.mode,
        r.obj ? fixed(*r.obj, 2) : "",
        r.gap_pct ? fixed(*r.gap_pct, 0) : "",
        r.time_s ? fixed(*r.time_s, 0) : "",
        csv_field(r.status),
        csv_field(join(r.warnings, "; ")),
        r.obj ? full(*r.obj) : "",
        r.bound ? full(*r.bound) : "",
        r.gap_pct ? full(*r.gap_pct) : "",
        std::to_string(r.nodes),
        csv_field(kGapFormula),
        std::to_string(r.bits),
        full(r.primal_m),
        full(r.dual_m),
        full(r.tau),
        full(r.time_limit_s),
    };
    out << join(fields, ",") << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_table(const std::vector<BenchRecord>& records, OutputFormat format) {
  return format == OutputFormat::kCsv ? csv(records) : markdown(records);
}

}  // namespace bilevel
