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

#ifndef BILEVEL_BENCH_HPP_
#define BILEVEL_BENCH_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/export.hpp"
#include "bilevel/kkt.hpp"
#include "bilevel/reformulate.hpp"

namespace bilevel {

enum class Backend { kInternal, kExportOnly };
enum class OutputFormat { kMarkdown, kCsv };

struct BenchInstance {
  int samples = 10;
  int features = 1;
  std::uint64_t seed = 42;
};

/// One sweep: every instance crossed with every mode.
struct BenchConfig {
  std::vector<BenchInstance> instances;
  std::vector<Mode> modes;
  std::optional<ExpansionParams> expansion;  // used by the -bin modes
  double time_limit_s = 600.0;
  double noise = 0.1;
  Backend backend = Backend::kInternal;
  OutputFormat output = OutputFormat::kMarkdown;
  ExportFormat export_format = ExportFormat::kLp;
  std::string out_dir = ".";

  /// Throws Error(kParse) on empty lists or a negative time limit.
  void validate() const;
};

/// Reads the flat `key = value` format, `#` comments:
///
///   instances     = ["10/01", "10/02"]   # S/F names
///   seeds         = [42]                 # crossed with instances
///   modes         = ["sos1", "bigm"]     # CLI mode spellings
///   time_limit    = 600
///   big_m         = 100                  # both sides of bigm
///   tau           = 1e-9                 # product
///   bounds        = 100                  # -bin modes: factors in [-b, b]
///   bits          = 8
///   noise         = 0.1
///   backend       = "internal"           # or "export"
///   output        = "markdown"           # or "csv"
///   export_format = "lp"                 # or "mps"
///   out_dir       = "."
///
/// Modes are built after all keys are read, so key order does not matter.
/// Throws Error(kParse) naming the line.
BenchConfig parse_config(std::istream& in);

struct BenchRecord {
  std::string instance;  // "S/FF"
  std::uint64_t seed = 0;
  std::string mode;
  std::optional<double> obj;
  std::optional<double> gap_pct;
  std::optional<double> time_s;  // blank once the limit is reached
  std::string status;
  std::vector<std::string> warnings;
  // Provenance.
  std::optional<double> bound;
  double solve_time_s = 0.0;
  std::int64_t nodes = 0;
  int bits = 0;
  double primal_m = 0.0;
  double dual_m = 0.0;
  double tau = 0.0;
  double time_limit_s = 0.0;
};

/// Tag naming the gap formula recorded in CSV metadata.
inline constexpr const char* kGapFormula = "100*|obj-bound|/max(|bound|,1e-10)";

bool is_error_status(const std::string& status);

/// Table blanks: time once solve_time_s reaches time_limit_s, gap when
/// there is no bound or no objective.
void apply_blank_rules(BenchRecord& rec);

/// One (instance, mode) cell. When `residual` is given and a point was
/// found, it receives the KKT residual of that point's lower-level part.
BenchRecord run_cell(const BenchConfig& cfg, const BenchInstance& inst, const Mode& mode,
                     KktResidual* residual = nullptr);

/// Records come back instance-major, then mode. A cell failure becomes a
/// record with status "Error: ..." and never stops the sweep.
std::vector<BenchRecord> run_benchmark(const BenchConfig& cfg);

/// Markdown: one `Inst | Obj | Gap | Time` table per mode, blanks as "-".
/// CSV: the same cells under a header, followed by full-precision metadata.
std::string render_table(const std::vector<BenchRecord>& records, OutputFormat format);

}  // namespace bilevel

#endif  // BILEVEL_BENCH_HPP_
