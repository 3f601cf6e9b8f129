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

#ifndef BILEVEL_ORACLE_HPP_
#define BILEVEL_ORACLE_HPP_

#include <cstdint>
#include <vector>

#include "bilevel/expr.hpp"
#include "bilevel/kkt.hpp"
#include "bilevel/model.hpp"
#include "bilevel/svr.hpp"

namespace bilevel {

/// Sorted, nonnegative hyperparameter values.
struct GridSpec {
  std::vector<double> c_values;
  std::vector<double> eps_values;

  /// C in {0} plus 21 log-spaced values on [1e-3, 1e3]; eps 21 values on [0, 2].
  static GridSpec standard();
};

enum class Certificate { kGridFeasible, kPatternExact };

struct OracleResult {
  double objective = 0.0;
  Assignment point;  // source variables followed by KKT duals
  Certificate certificate = Certificate::kGridFeasible;
  std::uint64_t pattern = 0;  // bit k set: slack of pair k is zero
  std::int64_t subproblems = 0;
  std::int64_t unbounded_patterns = 0;  // skipped; flagged for review
};

struct LowerSolution {
  Assignment point;  // upper values copied in, lower primal and duals solved
  double objective = 0.0;
  KktResidual residual;
};

/// Solves the lower level with the upper variables fixed at `upper`.
/// Throws Error(kMissingAssignment) if an upper variable has no value and
/// propagates solver errors; Error(kBilevelInfeasible) if the lower level
/// has no optimum at these parameters.
LowerSolution solve_lower(const BilevelModel& model, const KktSystem& kkt, const Assignment& upper);

/// Scans the grid on the tuning model of `inst`; every grid point is
/// bilevel feasible, so the result bounds the optimum from above. Ties keep
/// the first point in C-major order.
OracleResult grid_search(const SvrInstance& inst, const GridSpec& grid = GridSpec::standard());

struct PatternOptions {
  int max_pairs = 24;
  bool prune = true;  // skip subtrees with infeasible or strictly worse prefixes
};

/// Exact optimistic optimum by enumerating which side of every
/// complementarity pair is zero; each pattern is one LP. Among patterns within
/// 1e-9 of the best objective the lowest bitmask wins. Throws
/// kPatternCapExceeded, kQuadraticUnsupported (nonlinear upper rows) and
/// kBilevelInfeasible.
OracleResult enumerate_patterns(const BilevelModel& model, const KktSystem& kkt,
                                const PatternOptions& opts = {});

}  // namespace bilevel

#endif  // BILEVEL_ORACLE_HPP_
