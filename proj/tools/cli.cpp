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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bilevel/bench.hpp"
#include "bilevel/error.hpp"
#include "bilevel/export.hpp"
#include "bilevel/kkt.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/reformulate.hpp"
#include "bilevel/svr.hpp"

namespace bilevel {
namespace {

struct Options {
  int samples = 10;
  int features = 1;
  std::uint64_t seed = 42;
  double noise = 0.1;
  std::string mode = "sos1";
  double time_limit = 600.0;
  double big_m = 100.0;
  double bounds = 100.0;
  int bits = 8;
  double tau = 1e-9;
  std::string format = "lp";
  std::string out;
  std::string method = "enumerate";
  std::string config;
  std::string output;
  std::string backend;
};

void add_instance_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--samples", o.samples, "Number of samples S (>= 2)")->capture_default_str();
  cmd->add_option("--features", o.features, "Number of features F (>= 1)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  cmd->add_option("--noise", o.noise, "Label noise amplitude")->capture_default_str();
}

void add_mode_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode,
                  "sos1 | indicator | bigm | product | product-bin | strong-duality | strong-duality-bin")
      ->capture_default_str();
  cmd->add_option("--big-m", o.big_m, "Big-M for both sides of bigm")->capture_default_str();
  cmd->add_option("--bounds", o.bounds, "Expansion box [-b, b] for the -bin modes")->capture_default_str();
  cmd->add_option("--bits", o.bits, "Expansion bits for the -bin modes")->capture_default_str();
  cmd->add_option("--tau", o.tau, "Product relaxation: dual * slack <= tau")->capture_default_str();
}

BenchConfig single_cell_config(const Options& o) {
  BenchConfig cfg;
  cfg.instances = {{o.samples, o.features, o.seed}};
  cfg.modes = {parse_mode(o.mode, o.big_m, o.tau)};
  cfg.expansion = ExpansionParams{-o.bounds, o.bounds, o.bits};
  cfg.time_limit_s = o.time_limit;
  cfg.noise = o.noise;
  return cfg;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

int run_generate(const Options& o, std::ostream& out) {
  const auto inst = generate_instance(o.samples, o.features, o.seed, o.noise);
  if (o.out.empty()) {
    write_instance_csv(inst, out);
    return 0;
  }
  std::ofstream csv(o.out);
  std::ofstream json(o.out + ".json");
  if (!csv || !json) throw Error(ErrorCode::kIo, "cannot write '" + o.out + "'");
  write_instance_csv(inst, csv);
  write_instance_sidecar(inst, json);
  out << "wrote " << o.out << " and " << o.out << ".json\n";
  return 0;
}

int run_solve(const Options& o, std::ostream& out) {
  const auto cfg = single_cell_config(o);
  KktResidual r;
  const auto rec = run_cell(cfg, cfg.instances.front(), cfg.modes.front(), &r);
  out << render_table({rec}, OutputFormat::kMarkdown);
  if (rec.status != "Optimal" && rec.status.rfind("Error", 0) != 0) out << "status: " << rec.status << '\n';
  out << "nodes: " << rec.nodes << '\n';
  if (rec.obj) {
    out << "KKT residual: stationarity " << sci(r.stat_inf) << ", feasibility " << sci(r.feas_inf)
        << ", complementarity " << sci(r.comp_inf) << '\n';
  }
  return is_error_status(rec.status) ? 1 : 0;
}

int run_oracle(const Options& o, std::ostream& out) {
  const auto inst = generate_instance(o.samples, o.features, o.seed, o.noise);
  const auto svr = build_bilevel(inst);
  OracleResult res;
  if (o.method == "grid") {
    res = grid_search(inst);
  } else {
    res = enumerate_patterns(svr.model, build_kkt(svr.model));
  }
  char obj[64];
  std::snprintf(obj, sizeof obj, "%.10g", res.objective);
  out << "instance: " << inst.name() << " (seed " << o.seed << ")\n";
  out << "method: " << o.method << '\n';
  out << "objective: " << obj << '\n';
  out << "C: " << res.point[svr.c] << "\neps: " << res.point[svr.eps] << '\n';
  out << "subproblems: " << res.subproblems << '\n';
  if (res.certificate == Certificate::kPatternExact) {
    out << "pattern: 0x" << std::hex << res.pattern << std::dec << '\n';
    if (res.unbounded_patterns) out << "unbounded patterns skipped: " << res.unbounded_patterns << '\n';
  }
  return 0;
}

int run_export(const Options& o, std::ostream& out) {
  const auto cfg = single_cell_config(o);
  const Mode& mode = cfg.modes.front();
  const auto svr = build_bilevel(generate_instance(o.samples, o.features, o.seed, o.noise));
  const auto info = reformulate(svr.model, build_kkt(svr.model), mode,
                                mode.needs_expansion() ? cfg.expansion : std::nullopt);
  const auto format = parse_export_format(o.format);
  if (o.out.empty()) {
    if (format == ExportFormat::kLp) write_lp(info.slm, out);
    else write_mps(info.slm, out);
    return 0;
  }
  export_model(info.slm, format, o.out);
  out << "wrote " << o.out << " (" << info.slm.num_variables() << " variables, " << info.slm.num_constraints()
      << " constraints)\n";
  return 0;
}

// Replaces `key = ...` lines of the config text with the given values.
std::string override_config(const std::string& text, const std::map<std::string, std::string>& values) {
  std::istringstream in(text);
  std::ostringstream out;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t");
    const auto eq = line.find('=');
    std::string key;
    if (b != std::string::npos && eq != std::string::npos && eq > b) {
      key = line.substr(b, eq - b);
      key.erase(key.find_last_not_of(" \t") + 1);
    }
    if (!values.count(key)) out << line << '\n';
  }
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bilevel SVR hyperparameter tuning: single-level reformulations and benchmarks", "bilevel-bench"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto* generate = app.add_subcommand("generate", "Write a seeded instance as CSV (plus a .json sidecar with --out)");
  add_instance_flags(generate, o);
  generate->add_option("--out", o.out, "CSV path; stdout when omitted");

  auto* solve = app.add_subcommand("solve", "Reformulate and solve one instance with the internal solver");
  add_instance_flags(solve, o);
  add_mode_flags(solve, o);
  solve->add_option("--time-limit", o.time_limit, "Seconds")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Run an instance x mode sweep from a config file");
  bench->add_option("--config", o.config, "Config file")->required();
  auto* bench_limit = bench->add_option("--time-limit", o.time_limit, "Overrides time_limit");
  auto* bench_output = bench->add_option("--output", o.output, "Overrides output (markdown | csv)");
  auto* bench_backend = bench->add_option("--backend", o.backend, "Overrides backend (internal | export)");
  auto* bench_format = bench->add_option("--format", o.format, "Overrides export_format (lp | mps)");
  auto* bench_out = bench->add_option("--out", o.out, "Overrides out_dir");
  auto* bench_big_m = bench->add_option("--big-m", o.big_m, "Overrides big_m");
  auto* bench_tau = bench->add_option("--tau", o.tau, "Overrides tau");
  auto* bench_bits = bench->add_option("--bits", o.bits, "Overrides bits");
  auto* bench_bounds = bench->add_option("--bounds", o.bounds, "Overrides bounds");

  auto* oracle = app.add_subcommand("oracle", "Independent reference optimum");
  add_instance_flags(oracle, o);
  oracle->add_option("--method", o.method, "grid | enumerate")
      ->check(CLI::IsMember({"grid", "enumerate"}))
      ->capture_default_str();

  auto* exp = app.add_subcommand("export", "Write the single-level model as LP or MPS");
  add_instance_flags(exp, o);
  add_mode_flags(exp, o);
  exp->add_option("--format", o.format, "lp | mps")->check(CLI::IsMember({"lp", "mps"}))->capture_default_str();
  exp->add_option("--out", o.out, "File path; stdout when omitted");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (generate->parsed()) return run_generate(o, out);
    if (solve->parsed()) return run_solve(o, out);
    if (oracle->parsed()) return run_oracle(o, out);
    if (exp->parsed()) return run_export(o, out);

    std::ifstream file(o.config);
    if (!file) throw Error(ErrorCode::kIo, "cannot read config '" + o.config + "'");
    std::stringstream text;
    text << file.rdbuf();
    std::map<std::string, std::string> overrides;
    auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
    auto number = [](double v) {
      std::ostringstream s;
      s.precision(17);
      s << v;
      return s.str();
    };
    if (bench_limit->count()) overrides["time_limit"] = number(o.time_limit);
    if (bench_output->count()) overrides["output"] = quoted(o.output);
    if (bench_backend->count()) overrides["backend"] = quoted(o.backend);
    if (bench_format->count()) overrides["export_format"] = quoted(o.format);
    if (bench_out->count()) overrides["out_dir"] = quoted(o.out);
    if (bench_big_m->count()) overrides["big_m"] = number(o.big_m);
    if (bench_tau->count()) overrides["tau"] = number(o.tau);
    if (bench_bits->count()) overrides["bits"] = std::to_string(o.bits);
    if (bench_bounds->count()) overrides["bounds"] = number(o.bounds);
    std::istringstream merged(override_config(text.str(), overrides));
    const auto cfg = parse_config(merged);
    const auto records = run_benchmark(cfg);
    out << render_table(records, cfg.output);
    const bool failed = std::any_of(records.begin(), records.end(),
                                    [](const BenchRecord& r) { return is_error_status(r.status); });
    return failed ? 1 : 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kParse ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bilevel
