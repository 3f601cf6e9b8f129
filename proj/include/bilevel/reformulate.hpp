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

#ifndef BILEVEL_REFORMULATE_HPP_
#define BILEVEL_REFORMULATE_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bilevel/kkt.hpp"
#include "bilevel/model.hpp"
#include "bilevel/single_level.hpp"

namespace bilevel {

/// How complementarity `dual >= 0, slack >= 0, dual * slack = 0` is encoded.
struct Mode {
  enum class Kind { kSos1, kIndicator, kBigM, kProduct, kStrongDuality };

  Kind kind = Kind::kSos1;
  double primal_m = 100.0;  // BigM: slack <= primal_m * (1 - z)
  double dual_m = 100.0;    // BigM: dual <= dual_m * z
  double tau = 1e-9;        // Product: dual * slack <= tau
  bool expanded = false;    // Product / StrongDuality: binary expansion

  static Mode sos1() { return {Kind::kSos1}; }
  static Mode indicator() { return {Kind::kIndicator}; }
  static Mode big_m(double primal_m, double dual_m) { return {Kind::kBigM, primal_m, dual_m}; }
  static Mode product(double tau, bool expanded) {
    return {Kind::kProduct, 100.0, 100.0, tau, expanded};
  }
  static Mode strong_duality(bool expanded) {
    return {Kind::kStrongDuality, 100.0, 100.0, 0.0, expanded};
  }

  bool needs_expansion() const {
    return expanded && (kind == Kind::kProduct || kind == Kind::kStrongDuality);
  }
  /// CLI spelling: sos1, indicator, bigm, product, product-bin,
  /// strong-duality, strong-duality-bin.
  std::string name() const;
};

/// Throws Error(kParse) for unknown spellings. M and tau come from the caller.
Mode parse_mode(std::string_view name, double big_m = 100.0, double tau = 1e-9);

/// Fixed-point representation  p = lb + delta * sum_k 2^k b_k  on the
/// variable's bounds intersected with [var_lb, var_ub].
struct ExpansionParams {
  double var_lb = -100.0;
  double var_ub = 100.0;
  int bits = 8;

  /// Grid spacing for a factor living on [lb, ub].
  double spacing(double lb, double ub) const;
};

struct ExpandedVariable {
  double lower = 0.0;
  double delta = 0.0;
  std::vector<VarId> bits;
};

struct ReformulationInfo {
  SingleLevelModel slm;
  Mode mode;
  std::optional<ExpansionParams> expansion;
  std::vector<ComplementarityPair> pairs;
  std::map<std::size_t, VarId> pair_binaries;  // BigM / Indicator
  std::map<std::size_t, VarId> pair_slacks;    // SOS1 auxiliary slacks
  std::map<VarId, ExpandedVariable> expansion_vars;
  std::map<std::pair<VarId, VarId>, VarId> product_vars;  // (bit, partner) -> link variable
  std::size_t num_primal = 0;
  std::size_t num_duals = 0;

  bool is_dual(VarId v) const {
    const auto i = static_cast<std::size_t>(v.index);
    return i >= num_primal && i < num_primal + num_duals;
  }
};

/// Single-level model: upper objective and constraints, lower primal
/// feasibility, dual signs, stationarity, then the mode's complementarity
/// encoding. Throws kInvalidModel, kMissingExpansionParams,
/// kNonpositiveBigM, kInvalidTau, kInvalidBits, kUnboundedPartner.
ReformulationInfo reformulate(const BilevelModel& model, const KktSystem& kkt, const Mode& mode,
                              const std::optional<ExpansionParams>& expansion = std::nullopt);

/// New slack variable s >= 0 with s = slack, and SOS1{dual, s} weights (1, 2).
void apply_sos1(ReformulationInfo& info, std::size_t pair);
/// New binary z with  z = 1 => dual <= 0  and  z = 0 => slack <= 0.
void apply_indicator(ReformulationInfo& info, std::size_t pair);
/// New binary z with  dual <= dual_m z  and  slack <= primal_m (1 - z).
void apply_bigm(ReformulationInfo& info, std::size_t pair, double primal_m, double dual_m);
/// Quadratic row  dual * slack <= tau.
void apply_product(ReformulationInfo& info, std::size_t pair, double tau);
/// One aggregated row  lower primal objective - lower dual objective <= 0.
void apply_strong_duality(ReformulationInfo& info, const KktSystem& kkt, const BilevelModel& model);

/// Linearizes every quadratic row. In each bilinear term the designated
/// factor (a dual if present, else an upper-level variable, else the smaller
/// VarId) is replaced by its binary expansion; each bit * partner product
/// becomes a continuous variable tied by the four McCormick inequalities on
/// the partner's bounds. Bounds of every variable touched are clipped to
/// [var_lb, var_ub].
void binary_expand(ReformulationInfo& info, const BilevelModel& model,
                   const ExpansionParams& params);

/// Extends a point over the source variables and duals with values for every
/// auxiliary variable of `info`: SOS1 slacks, pair binaries (set by which side
/// of each pair is zero), expansion bits (nearest grid point) and bit
/// products. Feasible in the slm whenever the input satisfies the KKT system
/// and every expanded factor sits on its grid.
Assignment lift_point(const ReformulationInfo& info, const Assignment& point);

}  // namespace bilevel

#endif  // BILEVEL_REFORMULATE_HPP_
