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

#ifndef BILEVEL_REFSOLVER_HPP_
#define BILEVEL_REFSOLVER_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/expr.hpp"
#include "bilevel/kkt.hpp"
#include "bilevel/reformulate.hpp"
#include "bilevel/single_level.hpp"

namespace bilevel {

// ---------------------------------------------------------------------------
// Convex subproblems
// ---------------------------------------------------------------------------

/// min objective  s.t.  rows, lower <= x <= upper. The objective Hessian
/// must be positive semidefinite.
struct ConvexSubproblem {
  std::size_t num_variables = 0;
  QuadExpr objective;
  std::vector<LinearConstraint> rows;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

enum class ConvexStatus { kOptimal, kInfeasible, kUnbounded };

/// Multipliers follow the `g >= 0` convention of the KKT module: row_dual is
/// nonnegative for inequality rows (either sense) and free for equalities;
/// bound duals are nonnegative.
struct ConvexSolution {
  ConvexStatus status = ConvexStatus::kInfeasible;
  Eigen::VectorXd primal;
  Eigen::VectorXd row_dual;
  Eigen::VectorXd lower_dual;
  Eigen::VectorXd upper_dual;
  double objective = 0.0;
  KktResidual residual;  // of the subproblem's own KKT system
};

/// Affine objectives go to the simplex engine, quadratic ones to Lemke.
/// Throws Error(kNumerical) if the optimal point misses `tol` on any KKT
/// residual, or if the engine breaks down; Error(kInvalidModel) for a
/// non-PSD Hessian.
ConvexSolution solve_convex(const ConvexSubproblem& problem, double tol = 1e-7);

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

struct SolveOptions {
  double time_limit_s = 600.0;
  double gap_tol = 1e-6;  // relative; Optimal means gap_pct <= 100 * gap_tol
  std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
  double feas_tol = 1e-8;
  double int_tol = 1e-9;
};

enum class SolveStatus { kOptimal, kTimeLimit, kNodeLimit, kInfeasible, kUnbounded, kError };

std::string_view to_string(SolveStatus status);

enum class WarningKind { kBigMBoundActive };

struct SolveWarning {
  WarningKind kind = WarningKind::kBigMBoundActive;
  std::size_t pair = 0;
  std::string message;
};

/// One entry per change of the incumbent or the global bound.
struct SearchEvent {
  std::int64_t nodes = 0;
  double bound = -kInf;
  double incumbent = kInf;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kError;
  std::optional<Assignment> point;
  std::optional<double> objective;
  std::optional<double> bound;
  std::optional<double> gap_pct;
  double time_s = 0.0;
  std::int64_t nodes = 0;
  std::vector<SolveWarning> warnings;
  std::vector<SearchEvent> events;
  std::string message;  // set for kError
};

/// 100 * |objective - bound| / max(|bound|, 1e-10).
double compute_gap(double objective, double bound);

/// Best-bound branch and bound over LP relaxations. Relaxations drop
/// integrality, SOS1 sets, inactive indicators and every quadratic row whose
/// role is complementarity or strong duality; those are restored by
/// branching on binaries, SOS1 halves and the slm's dual/slack disjunctions.
/// Objective values are reported in the slm's own sense.
SolveResult solve_bnb(const SingleLevelModel& slm, const SolveOptions& opts = {});

/// Appends kBigMBoundActive for each pair whose dual or slack sits within
/// `margin` (relative) of its big-M at the incumbent. No-op without a point
/// or outside BigM mode.
void check_bigm_tightness(SolveResult& result, const ReformulationInfo& info, double margin = 1e-6);

}  // namespace bilevel

#endif  // BILEVEL_REFSOLVER_HPP_
