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

#include "bilevel/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bilevel/error.hpp"

namespace bilevel {

QuadExpr lower_primal_objective(const BilevelModel& model) {
  const auto& obj = model.lower_objective();
  return obj.sense == ObjSense::kMin ? obj.expr : -obj.expr;
}

KktSystem build_kkt(const BilevelModel& model) {
  if (const auto diags = validate(model); !diags.empty()) {
    throw Error(ErrorCode::kInvalidModel, std::string(to_string(diags.front().kind)) + ": " +
                                              diags.front().message);
  }
  KktSystem kkt;
  kkt.num_primal = model.num_variables();
  kkt.lower_vars = model.lower_variables();

  std::map<VarId, std::size_t> slot;
  for (std::size_t i = 0; i < kkt.lower_vars.size(); ++i) slot.emplace(kkt.lower_vars[i], i);

  // Gradient of the lower objective with respect to each lower variable.
  const QuadExpr f = lower_primal_objective(model);
  kkt.stationarity.assign(kkt.lower_vars.size(), AffineExpr{});
  for (const auto& [key, c] : f.quad_terms()) {
    const auto [a, b] = key;
    if (a == b) {
      if (auto it = slot.find(a); it != slot.end()) kkt.stationarity[it->second].add_term(a, 2.0 * c);
      continue;
    }
    if (auto it = slot.find(a); it != slot.end()) kkt.stationarity[it->second].add_term(b, c);
    if (auto it = slot.find(b); it != slot.end()) kkt.stationarity[it->second].add_term(a, c);
  }
  for (const auto& [v, c] : f.affine().terms()) {
    if (auto it = slot.find(v); it != slot.end()) kkt.stationarity[it->second].add_constant(c);
  }

  auto new_dual = [&](DualSource source, std::string name, bool nonnegative) -> DualVar& {
    DualVar d;
    d.id = VarId{static_cast<std::int32_t>(kkt.num_primal + kkt.duals.size())};
    d.source = source;
    d.nonnegative = nonnegative;
    d.name = std::move(name);
    kkt.duals.push_back(std::move(d));
    return kkt.duals.back();
  };
  // stat_v -= dual * d(g)/d(v) for every lower variable in g.
  auto dualize = [&](VarId dual, const AffineExpr& g) {
    for (const auto& [v, c] : g.terms()) {
      if (auto it = slot.find(v); it != slot.end()) kkt.stationarity[it->second].add_term(dual, -c);
    }
  };

  for (const auto& con : model.constraints()) {
    if (con.level != Level::kLower) continue;
    const AffineExpr& body = con.body.affine();
    const bool equality = con.sense == Sense::kEQ;
    DualVar& d = new_dual(DualSource::kConstraint, "dual_" + con.name, !equality);
    d.constraint = con.id;
    const VarId dual = d.id;
    AffineExpr g = con.sense == Sense::kLE ? (-body + con.rhs) : (body - con.rhs);
    dualize(dual, g);
    if (equality) {
      kkt.equalities.push_back(std::move(g));
    } else {
      kkt.pairs.push_back({dual, std::move(g)});
    }
  }
  for (VarId v : kkt.lower_vars) {
    const auto& info = model.variable(v);
    if (std::isfinite(info.lower_bound)) {
      DualVar& d = new_dual(DualSource::kLowerBound, "dual_lb_" + info.name, true);
      d.variable = v;
      const VarId dual = d.id;
      AffineExpr g = AffineExpr(v) - info.lower_bound;
      dualize(dual, g);
      kkt.pairs.push_back({dual, std::move(g)});
    }
    if (std::isfinite(info.upper_bound)) {
      DualVar& d = new_dual(DualSource::kUpperBound, "dual_ub_" + info.name, true);
      d.variable = v;
      const VarId dual = d.id;
      AffineExpr g = -AffineExpr(v) + info.upper_bound;
      dualize(dual, g);
      kkt.pairs.push_back({dual, std::move(g)});
    }
  }
  return kkt;
}

KktResidual kkt_residual(const KktSystem& kkt, const Assignment& point) {
  KktResidual r;
  for (const auto& s : kkt.stationarity) r.stat_inf = std::max(r.stat_inf, std::abs(evaluate(s, point)));
  for (const auto& e : kkt.equalities) r.feas_inf = std::max(r.feas_inf, std::abs(evaluate(e, point)));
  for (const auto& d : kkt.duals) {
    const double value = point.get(d.id);
    if (d.nonnegative) r.feas_inf = std::max(r.feas_inf, -value);
  }
  for (const auto& p : kkt.pairs) {
    const double slack = evaluate(p.slack, point);
    const double dual = point.get(p.dual);
    r.feas_inf = std::max(r.feas_inf, -slack);
    r.comp_inf = std::max(r.comp_inf, std::abs(dual * slack));
  }
  return r;
}

QuadExpr lower_dual_objective(const KktSystem& kkt, const BilevelModel& model) {
  QuadExpr dual_obj = lower_primal_objective(model);
  for (const auto& p : kkt.pairs) dual_obj -= AffineExpr(p.dual) * p.slack;
  std::size_t eq = 0;
  for (const auto& d : kkt.duals) {
    if (!d.nonnegative) dual_obj -= AffineExpr(d.id) * kkt.equalities[eq++];
  }
  for (std::size_t i = 0; i < kkt.lower_vars.size(); ++i) {
    dual_obj -= AffineExpr(kkt.lower_vars[i]) * kkt.stationarity[i];
  }
  return dual_obj;
}

}  // namespace bilevel
