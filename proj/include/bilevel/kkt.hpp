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

#ifndef BILEVEL_KKT_HPP_
#define BILEVEL_KKT_HPP_

#include <string>
#include <vector>

#include "bilevel/expr.hpp"
#include "bilevel/model.hpp"

namespace bilevel {

enum class DualSource { kConstraint, kLowerBound, kUpperBound };

/// A KKT multiplier, materialized as a variable that continues the VarId
/// range of the model it was derived from.
struct DualVar {
  VarId id;
  DualSource source = DualSource::kConstraint;
  ConstraintId constraint;  // kConstraint only
  VarId variable;           // bound duals only
  bool nonnegative = true;  // false for equality multipliers
  std::string name;
};

/// dual >= 0, slack >= 0, dual * slack = 0 at any lower-level optimum.
struct ComplementarityPair {
  VarId dual;
  AffineExpr slack;
};

/// KKT conditions of the lower level with the upper variables as parameters.
/// Every inequality `g >= 0` (constraints turned to `>=`, finite bounds) is
/// dualized as `- dual * g` in the Lagrangian.
struct KktSystem {
  std::size_t num_primal = 0;     // variables of the source model
  std::vector<DualVar> duals;     // ids num_primal, num_primal + 1, ...
  std::vector<VarId> lower_vars;  // stationarity[i] belongs to lower_vars[i]
  std::vector<AffineExpr> stationarity;
  std::vector<AffineExpr> equalities;  // lower equality rows as `body - rhs`
  std::vector<ComplementarityPair> pairs;

  std::size_t num_variables() const { return num_primal + duals.size(); }
  const DualVar& dual(VarId id) const { return duals.at(static_cast<std::size_t>(id.index) - num_primal); }
};

/// Throws Error(kInvalidModel) when validate() reports problems.
KktSystem build_kkt(const BilevelModel& model);

struct KktResidual {
  double stat_inf = 0.0;  // max |stationarity|
  double feas_inf = 0.0;  // max violation of slacks, equalities and dual signs
  double comp_inf = 0.0;  // max |dual * slack|
};

KktResidual kkt_residual(const KktSystem& kkt, const Assignment& point);

/// Lagrangian dual objective D of the lower level, written so that
///
///   primal - D = sum_k dual_k * slack_k + sum_e mult_e * eq_e + sum_v x_v * stat_v
///
/// holds as a polynomial identity. At stationary, feasible points the gap
/// therefore equals the complementarity sum. A maximized lower objective is
/// handled through its negation.
QuadExpr lower_dual_objective(const KktSystem& kkt, const BilevelModel& model);

/// Lower objective in minimization form.
QuadExpr lower_primal_objective(const BilevelModel& model);

}  // namespace bilevel

#endif  // BILEVEL_KKT_HPP_
