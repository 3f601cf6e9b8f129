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

#include "bilevel/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

#include "bilevel/error.hpp"

namespace bilevel {

std::string_view to_string(Level level) { return level == Level::kUpper ? "Upper" : "Lower"; }

std::string_view to_string(Sense sense) {
  switch (sense) {
    case Sense::kLE: return "<=";
    case Sense::kGE: return ">=";
    case Sense::kEQ: return "=";
  }
  return "?";
}

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::kNonAffineUpperObjective: return "NonAffineUpperObjective";
    case DiagnosticKind::kNonConvexLower: return "NonConvexLower";
    case DiagnosticKind::kNonAffineLowerConstraint: return "NonAffineLowerConstraint";
    case DiagnosticKind::kUnsupportedBilinear: return "UnsupportedBilinear";
    case DiagnosticKind::kUnknownVariable: return "UnknownVariable";
  }
  return "?";
}

VarId BilevelModel::add_variable(Level level, double lower_bound, double upper_bound,
                                 std::string name) {
  if (std::isnan(lower_bound) || std::isnan(upper_bound) || lower_bound > upper_bound) {
    throw Error(ErrorCode::kInvertedBounds, "variable '" + name + "' has lower bound " +
                                                std::to_string(lower_bound) + " > upper bound " +
                                                std::to_string(upper_bound));
  }
  if (names_.contains(name)) {
    throw Error(ErrorCode::kDuplicateName, "variable name '" + name + "' already used");
  }
  VarId id{static_cast<std::int32_t>(variables_.size())};
  names_.emplace(name, id);
  variables_.push_back({id, level, lower_bound, upper_bound, std::move(name)});
  return id;
}

void BilevelModel::check_known(const QuadExpr& expr) const {
  auto check = [&](VarId v) {
    if (!contains(v)) {
      throw Error(ErrorCode::kUnknownVariable, "variable index " + std::to_string(v.index) +
                                                   " is not part of the model");
    }
  };
  for (const auto& [k, c] : expr.quad_terms()) {
    check(k.first);
    check(k.second);
  }
  for (const auto& [v, c] : expr.affine().terms()) check(v);
}

ConstraintId BilevelModel::add_constraint(Level level, QuadExpr body, Sense sense, double rhs,
                                          std::string name) {
  check_known(body);
  if (level == Level::kLower && !body.is_affine()) {
    throw Error(ErrorCode::kNonAffineLowerConstraint,
                "lower-level constraint '" + name + "' has quadratic terms");
  }
  rhs -= body.constant();
  body.mutable_affine().set_constant(0.0);
  ConstraintId id{static_cast<std::int32_t>(constraints_.size())};
  if (name.empty()) name = "c" + std::to_string(id.index);
  constraints_.push_back({id, level, std::move(body), sense, rhs, std::move(name)});
  return id;
}

void BilevelModel::set_objective(Level level, ObjSense sense, QuadExpr expr) {
  (level == Level::kUpper ? upper_objective_ : lower_objective_) = {sense, std::move(expr)};
}

const VariableInfo& BilevelModel::variable(VarId v) const {
  if (!contains(v)) {
    throw Error(ErrorCode::kUnknownVariable, "variable index " + std::to_string(v.index));
  }
  return variables_[static_cast<std::size_t>(v.index)];
}

std::optional<VarId> BilevelModel::find_variable(std::string_view name) const {
  auto it = names_.find(std::string(name));
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

std::vector<VarId> BilevelModel::lower_variables() const {
  std::vector<VarId> out;
  for (const auto& v : variables_)
    if (v.level == Level::kLower) out.push_back(v.id);
  return out;
}

std::vector<VarId> BilevelModel::upper_variables() const {
  std::vector<VarId> out;
  for (const auto& v : variables_)
    if (v.level == Level::kUpper) out.push_back(v.id);
  return out;
}

namespace {

bool references_unknown(const BilevelModel& model, const QuadExpr& expr) {
  for (const auto& [k, c] : expr.quad_terms())
    if (!model.contains(k.first) || !model.contains(k.second)) return true;
  for (const auto& [v, c] : expr.affine().terms())
    if (!model.contains(v)) return true;
  return false;
}

}  // namespace

std::vector<Diagnostic> validate(const BilevelModel& model) {
  std::vector<Diagnostic> out;

  const auto& upper = model.upper_objective();
  const auto& lower = model.lower_objective();
  bool unknown = references_unknown(model, upper.expr) || references_unknown(model, lower.expr);
  for (const auto& c : model.constraints()) unknown = unknown || references_unknown(model, c.body);
  if (unknown) {
    out.push_back({DiagnosticKind::kUnknownVariable, "an expression references a foreign VarId"});
    return out;
  }

  if (!upper.expr.is_affine()) {
    out.push_back({DiagnosticKind::kNonAffineUpperObjective,
                   "upper objective has " + std::to_string(upper.expr.quad_terms().size()) +
                       " quadratic terms"});
  }

  // Hessian of the lower objective over the lower variables it touches.
  std::map<VarId, Eigen::Index> slot;
  for (const auto& [k, c] : lower.expr.quad_terms()) {
    if (model.is_lower(k.first) && model.is_lower(k.second)) {
      slot.try_emplace(k.first, 0);
      slot.try_emplace(k.second, 0);
    }
  }
  Eigen::Index n = 0;
  for (auto& [v, i] : slot) i = n++;
  if (n > 0) {
    const double sign = lower.sense == ObjSense::kMin ? 1.0 : -1.0;
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [k, c] : lower.expr.quad_terms()) {
      auto a = slot.find(k.first);
      auto b = slot.find(k.second);
      if (a == slot.end() || b == slot.end()) continue;
      if (a->second == b->second) {
        hessian(a->second, a->second) += 2.0 * sign * c;
      } else {
        hessian(a->second, b->second) += sign * c;
        hessian(b->second, a->second) += sign * c;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -1e-9) {
      out.push_back({DiagnosticKind::kNonConvexLower,
                     "lower objective Hessian has eigenvalue " + std::to_string(min_eig)});
    }
  }

  for (const auto& c : model.constraints()) {
    if (c.level == Level::kLower) {
      if (!c.body.is_affine()) {
        out.push_back({DiagnosticKind::kNonAffineLowerConstraint,
                       "lower constraint '" + c.name + "' is not affine"});
      }
      continue;
    }
    for (const auto& [k, coef] : c.body.quad_terms()) {
      if (model.is_lower(k.first) == model.is_lower(k.second)) {
        out.push_back({DiagnosticKind::kUnsupportedBilinear,
                       "upper constraint '" + c.name + "' has a same-level product"});
        break;
      }
    }
  }
  return out;
}

}  // namespace bilevel
