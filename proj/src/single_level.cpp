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

#include "bilevel/single_level.hpp"

#include <algorithm>
#include <cmath>

#include "bilevel/error.hpp"

namespace bilevel {

VarId SingleLevelModel::add_variable(std::string name, double lower_bound, double upper_bound,
                                     bool binary) {
  VarId id{static_cast<std::int32_t>(variables_.size())};
  variables_.push_back({id, std::move(name), lower_bound, upper_bound, binary});
  return id;
}

void SingleLevelModel::add_variable_with_id(VarId id, std::string name, double lower_bound,
                                            double upper_bound, bool binary) {
  if (static_cast<std::size_t>(id.index) != variables_.size()) {
    throw Error(ErrorCode::kInvalidModel, "variable ids must be added in order");
  }
  add_variable(std::move(name), lower_bound, upper_bound, binary);
}

void SingleLevelModel::add_linear(AffineExpr body, Sense sense, double rhs, std::string name) {
  rhs -= body.constant();
  body.set_constant(0.0);
  linear_.push_back({std::move(body), sense, rhs, std::move(name)});
}

void SingleLevelModel::add_quadratic(QuadExpr body, Sense sense, double rhs, std::string name,
                                     QuadraticRole role, std::size_t pair) {
  rhs -= body.constant();
  body.mutable_affine().set_constant(0.0);
  quadratic_.push_back({std::move(body), sense, rhs, std::move(name), role, pair});
}

void SingleLevelModel::add_sos1(std::vector<VarId> members, std::vector<double> weights,
                                std::string name) {
  for (VarId v : members) {
    if (variable(v).binary) {
      throw Error(ErrorCode::kInvalidModel, "SOS1 member '" + variable(v).name + "' is binary");
    }
  }
  sos1_.push_back({std::move(members), std::move(weights), std::move(name)});
}

void SingleLevelModel::add_indicator(VarId binary, bool active_value, AffineExpr body, Sense sense,
                                     double rhs, std::string name) {
  if (!variable(binary).binary) {
    throw Error(ErrorCode::kInvalidModel,
                "indicator variable '" + variable(binary).name + "' is not binary");
  }
  rhs -= body.constant();
  body.set_constant(0.0);
  indicators_.push_back({binary, active_value, std::move(body), sense, rhs, std::move(name)});
}

std::size_t SingleLevelModel::num_binaries() const {
  return static_cast<std::size_t>(
      std::count_if(variables_.begin(), variables_.end(), [](const auto& v) { return v.binary; }));
}

namespace {

double row_violation(double activity, Sense sense, double rhs) {
  switch (sense) {
    case Sense::kLE: return std::max(0.0, activity - rhs);
    case Sense::kGE: return std::max(0.0, rhs - activity);
    case Sense::kEQ: return std::abs(activity - rhs);
  }
  return 0.0;
}

}  // namespace

double max_violation(const SingleLevelModel& slm, const Assignment& point) {
  double worst = 0.0;
  for (const auto& v : slm.variables()) {
    const double x = point.get(v.id);
    worst = std::max({worst, v.lower_bound - x, x - v.upper_bound});
    if (v.binary) worst = std::max(worst, std::min(std::abs(x), std::abs(x - 1.0)));
  }
  for (const auto& c : slm.linear_constraints())
    worst = std::max(worst, row_violation(evaluate(c.body, point), c.sense, c.rhs));
  for (const auto& c : slm.quadratic_constraints())
    worst = std::max(worst, row_violation(evaluate(c.body, point), c.sense, c.rhs));
  for (const auto& ind : slm.indicator_constraints()) {
    const bool active = (point.get(ind.binary) > 0.5) == ind.active_value;
    if (active) worst = std::max(worst, row_violation(evaluate(ind.body, point), ind.sense, ind.rhs));
  }
  for (const auto& set : slm.sos1_sets()) {
    std::vector<double> mags;
    for (VarId v : set.members) mags.push_back(std::abs(point.get(v)));
    std::sort(mags.begin(), mags.end());
    if (mags.size() >= 2) worst = std::max(worst, mags[mags.size() - 2]);
  }
  return worst;
}

}  // namespace bilevel
