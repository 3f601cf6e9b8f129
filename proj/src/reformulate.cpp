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

#include "bilevel/reformulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "bilevel/error.hpp"

namespace bilevel {

std::string Mode::name() const {
  switch (kind) {
    case Kind::kSos1: return "sos1";
    case Kind::kIndicator: return "indicator";
    case Kind::kBigM: return "bigm";
    case Kind::kProduct: return expanded ? "product-bin" : "product";
    case Kind::kStrongDuality: return expanded ? "strong-duality-bin" : "strong-duality";
  }
  return "?";
}

Mode parse_mode(std::string_view name, double big_m, double tau) {
  if (name == "sos1") return Mode::sos1();
  if (name == "indicator") return Mode::indicator();
  if (name == "bigm") return Mode::big_m(big_m, big_m);
  if (name == "product") return Mode::product(tau, false);
  if (name == "product-bin") return Mode::product(tau, true);
  if (name == "strong-duality") return Mode::strong_duality(false);
  if (name == "strong-duality-bin") return Mode::strong_duality(true);
  throw Error(ErrorCode::kParse, "unknown mode '" + std::string(name) + "'");
}

double ExpansionParams::spacing(double lb, double ub) const {
  return (ub - lb) / (std::ldexp(1.0, bits) - 1.0);
}

namespace {

std::string pair_label(const ReformulationInfo& info, std::size_t pair) {
  const std::string& dual = info.slm.variable(info.pairs[pair].dual).name;
  return dual.rfind("dual_", 0) == 0 ? dual.substr(5) : dual;
}

void check_mode(const Mode& mode, const std::optional<ExpansionParams>& expansion) {
  if (mode.kind == Mode::Kind::kBigM && !(mode.primal_m > 0.0 && mode.dual_m > 0.0)) {
    throw Error(ErrorCode::kNonpositiveBigM, "big-M values must be positive");
  }
  if (mode.kind == Mode::Kind::kProduct && !(mode.tau >= 0.0)) {
    throw Error(ErrorCode::kInvalidTau, "tau must be nonnegative");
  }
  if (mode.needs_expansion() && !expansion) {
    throw Error(ErrorCode::kMissingExpansionParams, mode.name() + " needs expansion parameters");
  }
  if (expansion && expansion->bits < 1) {
    throw Error(ErrorCode::kInvalidBits, "bits must be >= 1, got " + std::to_string(expansion->bits));
  }
  if (expansion && !(expansion->var_lb < expansion->var_ub)) {
    throw Error(ErrorCode::kInvertedBounds, "expansion bounds must satisfy var_lb < var_ub");
  }
}

}  // namespace

ReformulationInfo reformulate(const BilevelModel& model, const KktSystem& kkt, const Mode& mode,
                              const std::optional<ExpansionParams>& expansion) {
  check_mode(mode, expansion);
  if (kkt.num_primal != model.num_variables()) {
    throw Error(ErrorCode::kInvalidModel, "KKT system was derived from a different model");
  }
  ReformulationInfo info;
  info.mode = mode;
  if (mode.needs_expansion()) info.expansion = expansion;
  info.pairs = kkt.pairs;
  info.num_primal = kkt.num_primal;
  info.num_duals = kkt.duals.size();
  auto& slm = info.slm;

  for (const auto& v : model.variables()) slm.add_variable_with_id(v.id, v.name, v.lower_bound, v.upper_bound);
  for (const auto& d : kkt.duals) {
    slm.add_variable_with_id(d.id, d.name, d.nonnegative ? 0.0 : -kInf, kInf);
  }

  const auto& upper = model.upper_objective();
  slm.set_objective(upper.sense, upper.expr.affine());

  for (const auto& c : model.constraints()) {
    if (c.body.is_affine()) {
      slm.add_linear(c.body.affine(), c.sense, c.rhs, c.name);
    } else {
      slm.add_quadratic(c.body, c.sense, c.rhs, c.name, QuadraticRole::kGeneral);
    }
  }
  for (std::size_t i = 0; i < kkt.stationarity.size(); ++i) {
    slm.add_linear(kkt.stationarity[i], Sense::kEQ, 0.0,
                   "stat_" + model.variable(kkt.lower_vars[i]).name);
  }

  switch (mode.kind) {
    case Mode::Kind::kSos1:
      for (std::size_t k = 0; k < info.pairs.size(); ++k) apply_sos1(info, k);
      break;
    case Mode::Kind::kIndicator:
      for (std::size_t k = 0; k < info.pairs.size(); ++k) apply_indicator(info, k);
      break;
    case Mode::Kind::kBigM:
      for (std::size_t k = 0; k < info.pairs.size(); ++k) apply_bigm(info, k, mode.primal_m, mode.dual_m);
      break;
    case Mode::Kind::kProduct:
      for (std::size_t k = 0; k < info.pairs.size(); ++k) apply_product(info, k, mode.tau);
      break;
    case Mode::Kind::kStrongDuality:
      apply_strong_duality(info, kkt, model);
      break;
  }
  if (mode.needs_expansion()) binary_expand(info, model, *expansion);
  return info;
}

void apply_sos1(ReformulationInfo& info, std::size_t pair) {
  auto& slm = info.slm;
  const auto& p = info.pairs.at(pair);
  const std::string label = pair_label(info, pair);
  const VarId s = slm.add_variable("s_" + label, 0.0, kInf);
  slm.add_linear(AffineExpr(s) - p.slack, Sense::kEQ, 0.0, "sdef_" + label);
  slm.add_sos1({p.dual, s}, {1.0, 2.0}, "sos_" + label);
  info.pair_slacks[pair] = s;
}

void apply_indicator(ReformulationInfo& info, std::size_t pair) {
  auto& slm = info.slm;
  const auto& p = info.pairs.at(pair);
  const std::string label = pair_label(info, pair);
  const VarId z = slm.add_variable("z_" + label, 0.0, 1.0, true);
  slm.add_indicator(z, true, AffineExpr(p.dual), Sense::kLE, 0.0, "ind_dual_" + label);
  slm.add_indicator(z, false, p.slack, Sense::kLE, 0.0, "ind_slack_" + label);
  info.pair_binaries[pair] = z;
}

void apply_bigm(ReformulationInfo& info, std::size_t pair, double primal_m, double dual_m) {
  if (!(primal_m > 0.0 && dual_m > 0.0)) {
    throw Error(ErrorCode::kNonpositiveBigM, "big-M values must be positive");
  }
  auto& slm = info.slm;
  const auto& p = info.pairs.at(pair);
  const std::string label = pair_label(info, pair);
  const VarId z = slm.add_variable("z_" + label, 0.0, 1.0, true);
  slm.add_linear(AffineExpr(p.dual) - dual_m * AffineExpr(z), Sense::kLE, 0.0, "bigm_dual_" + label);
  slm.add_linear(p.slack + primal_m * AffineExpr(z), Sense::kLE, primal_m, "bigm_slack_" + label);
  info.pair_binaries[pair] = z;
}

void apply_product(ReformulationInfo& info, std::size_t pair, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorCode::kInvalidTau, "tau must be nonnegative");
  const auto& p = info.pairs.at(pair);
  info.slm.add_quadratic(AffineExpr(p.dual) * p.slack, Sense::kLE, tau,
                         "comp_" + pair_label(info, pair), QuadraticRole::kComplementarity, pair);
  info.slm.add_disjunction(p.dual, p.slack);
}

void apply_strong_duality(ReformulationInfo& info, const KktSystem& kkt, const BilevelModel& model) {
  const QuadExpr gap = lower_primal_objective(model) - lower_dual_objective(kkt, model);
  info.slm.add_quadratic(gap, Sense::kLE, 0.0, "strong_duality", QuadraticRole::kStrongDuality);
  for (const auto& p : info.pairs) info.slm.add_disjunction(p.dual, p.slack);
}

namespace {

class Expander {
 public:
  Expander(ReformulationInfo& info, const BilevelModel& model, const ExpansionParams& params)
      : info_(info), model_(model), params_(params) {}

  // Replaces coef * a * b by a linear expression appended to `out`.
  void linearize(VarId a, VarId b, double coef, AffineExpr& out) {
    const auto [p, q] = designate(a, b);
    const ExpandedVariable& ex = expand(p);
    clip(q);
    // coef * (lower + delta * sum_k 2^k b_k) * q
    out.add_term(q, coef * ex.lower);
    for (std::size_t k = 0; k < ex.bits.size(); ++k) {
      const VarId u = product(ex.bits[k], q);
      out.add_term(u, coef * ex.delta * std::ldexp(1.0, static_cast<int>(k)));
    }
  }

 private:
  int rank(VarId v) const {
    if (info_.is_dual(v)) return 0;
    if (static_cast<std::size_t>(v.index) < info_.num_primal && !model_.is_lower(v)) return 1;
    return 2;
  }

  std::pair<VarId, VarId> designate(VarId a, VarId b) const {
    if (a == b) return {a, a};
    const int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? std::pair{a, b} : std::pair{b, a};
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }

  // Intersects the variable's bounds with [var_lb, var_ub] in place.
  std::pair<double, double> clip(VarId v) {
    SlmVariable& var = info_.slm.mutable_variable(v);
    const double lb = std::max(var.lower_bound, params_.var_lb);
    const double ub = std::min(var.upper_bound, params_.var_ub);
    if (!std::isfinite(lb) || !std::isfinite(ub)) {
      throw Error(ErrorCode::kUnboundedPartner, "variable '" + var.name + "' has no finite box");
    }
    if (lb > ub) {
      throw Error(ErrorCode::kInvertedBounds, "variable '" + var.name + "' lies outside the expansion box");
    }
    var.lower_bound = lb;
    var.upper_bound = ub;
    return {lb, ub};
  }

  const ExpandedVariable& expand(VarId p) {
    if (auto it = info_.expansion_vars.find(p); it != info_.expansion_vars.end()) return it->second;
    const auto [lb, ub] = clip(p);
    ExpandedVariable ex;
    ex.lower = lb;
    ex.delta = params_.spacing(lb, ub);
    const std::string name = info_.slm.variable(p).name;
    AffineExpr link(p);
    for (int k = 0; k < params_.bits; ++k) {
      const VarId bit = info_.slm.add_variable("bin_" + name + "_" + std::to_string(k), 0.0, 1.0, true);
      // High-order bits first: each branch halves the factor's range.
      info_.slm.mutable_variable(bit).branch_priority = k + 1;
      ex.bits.push_back(bit);
      link.add_term(bit, -ex.delta * std::ldexp(1.0, k));
    }
    info_.slm.add_linear(std::move(link), Sense::kEQ, lb, "link_" + name);
    return info_.expansion_vars.emplace(p, std::move(ex)).first->second;
  }

  // u = bit * q, exact for binary bit through McCormick on q's box.
  VarId product(VarId bit, VarId q) {
    const auto key = std::pair{bit, q};
    if (auto it = info_.product_vars.find(key); it != info_.product_vars.end()) return it->second;
    const auto [ql, qu] = clip(q);
    auto& slm = info_.slm;
    const std::string name = slm.variable(bit).name + "_x_" + slm.variable(q).name;
    const VarId u = slm.add_variable("prod_" + name, std::min(0.0, ql), std::max(0.0, qu));
    const AffineExpr U(u), B(bit), Q(q);
    slm.add_linear(U - ql * B, Sense::kGE, 0.0, "mc1_" + name);
    slm.add_linear(U - qu * B, Sense::kLE, 0.0, "mc2_" + name);
    slm.add_linear(U - Q - qu * B, Sense::kGE, -qu, "mc3_" + name);
    slm.add_linear(U - Q - ql * B, Sense::kLE, -ql, "mc4_" + name);
    info_.product_vars.emplace(key, u);
    return u;
  }

  ReformulationInfo& info_;
  const BilevelModel& model_;
  const ExpansionParams& params_;
};

}  // namespace

void binary_expand(ReformulationInfo& info, const BilevelModel& model, const ExpansionParams& params) {
  if (params.bits < 1) {
    throw Error(ErrorCode::kInvalidBits, "bits must be >= 1, got " + std::to_string(params.bits));
  }
  Expander expander(info, model, params);
  auto quads = std::move(info.slm.mutable_quadratic_constraints());
  info.slm.mutable_quadratic_constraints().clear();
  for (auto& row : quads) {
    AffineExpr linear = row.body.affine();
    for (const auto& [key, coef] : row.body.quad_terms()) {
      expander.linearize(key.first, key.second, coef, linear);
    }
    info.slm.add_linear(std::move(linear), row.sense, row.rhs, row.name);
  }
  info.expansion = params;
  info.slm.clear_disjunctions();
}

Assignment lift_point(const ReformulationInfo& info, const Assignment& point) {
  Assignment out(info.slm.num_variables());
  const std::size_t base = info.num_primal + info.num_duals;
  for (std::size_t i = 0; i < base; ++i) {
    const VarId v{static_cast<std::int32_t>(i)};
    out.set(v, point.get(v));
  }
  for (const auto& [pair, s] : info.pair_slacks) out.set(s, evaluate(info.pairs[pair].slack, point));
  for (const auto& [pair, z] : info.pair_binaries) {
    const bool dual_positive = point.get(info.pairs[pair].dual) > 0.0;
    // BigM: z = 1 frees the dual. Indicator: z = 1 pins the dual to zero.
    const bool z_one = info.mode.kind == Mode::Kind::kBigM ? dual_positive : !dual_positive;
    out.set(z, z_one ? 1.0 : 0.0);
  }
  for (const auto& [var, ex] : info.expansion_vars) {
    const double steps = ex.delta > 0.0 ? std::round((out.get(var) - ex.lower) / ex.delta) : 0.0;
    auto code = static_cast<std::uint64_t>(
        std::clamp(steps, 0.0, std::ldexp(1.0, static_cast<int>(ex.bits.size())) - 1.0));
    for (const VarId bit : ex.bits) {
      out.set(bit, static_cast<double>(code & 1U));
      code >>= 1U;
    }
  }
  for (const auto& [key, u] : info.product_vars) out.set(u, out.get(key.first) * out.get(key.second));
  return out;
}

}  // namespace bilevel
