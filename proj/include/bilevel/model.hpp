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

#ifndef BILEVEL_MODEL_HPP_
#define BILEVEL_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bilevel/expr.hpp"

namespace bilevel {

enum class Level { kUpper, kLower };
enum class Sense { kLE, kGE, kEQ };
enum class ObjSense { kMin, kMax };

std::string_view to_string(Level level);
std::string_view to_string(Sense sense);

struct VariableInfo {
  VarId id;
  Level level = Level::kUpper;
  double lower_bound = -kInf;
  double upper_bound = kInf;
  std::string name;
};

struct ConstraintId {
  std::int32_t index = -1;
  constexpr auto operator<=>(const ConstraintId&) const = default;
};

/// `body sense rhs`, with any constant of the body folded into `rhs`.
struct Constraint {
  ConstraintId id;
  Level level = Level::kUpper;
  QuadExpr body;
  Sense sense = Sense::kGE;
  double rhs = 0.0;
  std::string name;
};

struct Objective {
  ObjSense sense = ObjSense::kMin;
  QuadExpr expr;
};

enum class DiagnosticKind {
  kNonAffineUpperObjective,
  kNonConvexLower,
  kNonAffineLowerConstraint,
  kUnsupportedBilinear,
  kUnknownVariable,
};

std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
};

/// Two-level model: variables are owned by one level, constraints belong to
/// one level, and each level carries its own objective. Upper-level variables
/// act as parameters of the lower problem. Optimistic semantics are implied
/// by every single-level reformulation built on top of this model.
///
/// Construction is single-owner; a finished model is read-only.
class BilevelModel {
 public:
  /// Throws kInvertedBounds, kDuplicateName.
  VarId add_variable(Level level, double lower_bound, double upper_bound, std::string name);

  /// Throws kUnknownVariable, kNonAffineLowerConstraint. Lower-level bodies
  /// must be affine; upper-level variables may appear in them linearly.
  ConstraintId add_constraint(Level level, QuadExpr body, Sense sense, double rhs,
                              std::string name = {});

  void set_objective(Level level, ObjSense sense, QuadExpr expr);

  const std::vector<VariableInfo>& variables() const { return variables_; }
  const VariableInfo& variable(VarId v) const;
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Objective& upper_objective() const { return upper_objective_; }
  const Objective& lower_objective() const { return lower_objective_; }
  const Objective& objective(Level level) const {
    return level == Level::kUpper ? upper_objective_ : lower_objective_;
  }

  std::size_t num_variables() const { return variables_.size(); }
  bool contains(VarId v) const {
    return v.index >= 0 && static_cast<std::size_t>(v.index) < variables_.size();
  }
  bool is_lower(VarId v) const { return variable(v).level == Level::kLower; }
  std::optional<VarId> find_variable(std::string_view name) const;

  std::vector<VarId> lower_variables() const;
  std::vector<VarId> upper_variables() const;

 private:
  void check_known(const QuadExpr& expr) const;

  std::vector<VariableInfo> variables_;
  std::vector<Constraint> constraints_;
  std::unordered_map<std::string, VarId> names_;
  Objective upper_objective_;
  Objective lower_objective_;
};

/// Structural checks. An empty result means every reformulation in this
/// library applies: affine upper objective, convex lower objective in the
/// lower variables (Hessian eigenvalues >= -1e-9), affine lower constraints,
/// and bilinear terms elsewhere only of upper x lower form.
std::vector<Diagnostic> validate(const BilevelModel& model);

}  // namespace bilevel

#endif  // BILEVEL_MODEL_HPP_
