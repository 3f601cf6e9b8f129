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

#ifndef BILEVEL_SINGLE_LEVEL_HPP_
#define BILEVEL_SINGLE_LEVEL_HPP_

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "bilevel/expr.hpp"
#include "bilevel/model.hpp"

namespace bilevel {

struct SlmVariable {
  VarId id;
  std::string name;
  double lower_bound = -kInf;
  double upper_bound = kInf;
  bool binary = false;
  int branch_priority = 0;  // among fractional binaries, higher branches first
};

struct LinearConstraint {
  AffineExpr body;
  Sense sense = Sense::kGE;
  double rhs = 0.0;
  std::string name;
};

enum class QuadraticRole {
  kGeneral,          // not handled by the branch-and-bound engine
  kComplementarity,  // dual * slack <= tau for one pair
  kStrongDuality,    // lower primal objective - lower dual objective <= 0
};

struct QuadraticConstraint {
  QuadExpr body;
  Sense sense = Sense::kLE;
  double rhs = 0.0;
  std::string name;
  QuadraticRole role = QuadraticRole::kGeneral;
  std::size_t pair = std::numeric_limits<std::size_t>::max();
};

struct Sos1Set {
  std::vector<VarId> members;
  std::vector<double> weights;
  std::string name;
};

/// `binary == active_value  =>  body sense rhs`.
struct IndicatorConstraint {
  VarId binary;
  bool active_value = true;
  AffineExpr body;
  Sense sense = Sense::kLE;
  double rhs = 0.0;
  std::string name;
};

/// `dual == 0  or  slack == 0`, with both sides already constrained to be
/// nonnegative elsewhere. Quadratic complementarity and strong-duality rows
/// are branched through these.
struct Disjunction {
  VarId dual;
  AffineExpr slack;
};

/// Flat single-level problem produced by a reformulation. VarIds of the
/// source bilevel model and of the KKT duals are preserved verbatim; every
/// auxiliary variable is appended after them.
class SingleLevelModel {
 public:
  VarId add_variable(std::string name, double lower_bound, double upper_bound,
                     bool binary = false);
  /// Adds the variable with the exact id `id`; ids must arrive in order.
  void add_variable_with_id(VarId id, std::string name, double lower_bound, double upper_bound,
                            bool binary = false);

  void add_linear(AffineExpr body, Sense sense, double rhs, std::string name);
  void add_quadratic(QuadExpr body, Sense sense, double rhs, std::string name, QuadraticRole role,
                     std::size_t pair = std::numeric_limits<std::size_t>::max());
  /// Throws kInvalidModel if a member is binary.
  void add_sos1(std::vector<VarId> members, std::vector<double> weights, std::string name);
  /// Throws kInvalidModel if `binary` is not flagged binary.
  void add_indicator(VarId binary, bool active_value, AffineExpr body, Sense sense, double rhs,
                     std::string name);
  void add_disjunction(VarId dual, AffineExpr slack) { disjunctions_.push_back({dual, std::move(slack)}); }
  void clear_disjunctions() { disjunctions_.clear(); }

  void set_objective(ObjSense sense, AffineExpr expr) {
    objective_sense_ = sense;
    objective_ = std::move(expr);
  }

  std::vector<SlmVariable>& mutable_variables() { return variables_; }
  const std::vector<SlmVariable>& variables() const { return variables_; }
  const SlmVariable& variable(VarId v) const { return variables_.at(static_cast<std::size_t>(v.index)); }
  SlmVariable& mutable_variable(VarId v) { return variables_.at(static_cast<std::size_t>(v.index)); }
  const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
  const std::vector<QuadraticConstraint>& quadratic_constraints() const { return quadratic_; }
  std::vector<QuadraticConstraint>& mutable_quadratic_constraints() { return quadratic_; }
  const std::vector<Sos1Set>& sos1_sets() const { return sos1_; }
  const std::vector<IndicatorConstraint>& indicator_constraints() const { return indicators_; }
  const std::vector<Disjunction>& disjunctions() const { return disjunctions_; }
  ObjSense objective_sense() const { return objective_sense_; }
  const AffineExpr& objective() const { return objective_; }

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_binaries() const;
  /// Linear rows + quadratic rows + indicators; SOS sets are not rows.
  std::size_t num_constraints() const {
    return linear_.size() + quadratic_.size() + indicators_.size();
  }

 private:
  std::vector<SlmVariable> variables_;
  std::vector<LinearConstraint> linear_;
  std::vector<QuadraticConstraint> quadratic_;
  std::vector<Sos1Set> sos1_;
  std::vector<IndicatorConstraint> indicators_;
  std::vector<Disjunction> disjunctions_;
  ObjSense objective_sense_ = ObjSense::kMin;
  AffineExpr objective_;
};

/// Largest violation of linear, quadratic, bound, integrality, SOS1 and
/// indicator constraints at `point`.
double max_violation(const SingleLevelModel& slm, const Assignment& point);

}  // namespace bilevel

#endif  // BILEVEL_SINGLE_LEVEL_HPP_
