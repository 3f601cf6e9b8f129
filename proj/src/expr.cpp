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

#include "bilevel/expr.hpp"

#include <cmath>
#include <string>

#include "bilevel/error.hpp"

namespace bilevel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvertedBounds: return "InvertedBounds";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kUnknownVariable: return "UnknownVariable";
    case ErrorCode::kNonAffineLowerConstraint: return "NonAffineLowerConstraint";
    case ErrorCode::kMissingAssignment: return "MissingAssignment";
    case ErrorCode::kInvalidModel: return "InvalidModel";
    case ErrorCode::kMissingExpansionParams: return "MissingExpansionParams";
    case ErrorCode::kNonpositiveBigM: return "NonpositiveBigM";
    case ErrorCode::kInvalidTau: return "InvalidTau";
    case ErrorCode::kInvalidBits: return "InvalidBits";
    case ErrorCode::kUnboundedPartner: return "UnboundedPartner";
    case ErrorCode::kInvalidInstance: return "InvalidInstance";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kPatternCapExceeded: return "PatternCapExceeded";
    case ErrorCode::kBilevelInfeasible: return "BilevelInfeasible";
    case ErrorCode::kQuadraticUnsupported: return "QuadraticUnsupported";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kNumerical: return "NumericalBreakdown";
  }
  return "Unknown";
}

std::ostream& operator<<(std::ostream& os, VarId v) { return os << "v" << v.index; }

void AffineExpr::add_term(VarId v, double coefficient) {
  if (coefficient == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(v, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double AffineExpr::coefficient(VarId v) const {
  auto it = terms_.find(v);
  return it == terms_.end() ? 0.0 : it->second;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  for (const auto& [v, c] : other.terms_) add_term(v, c);
  constant_ += other.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  for (const auto& [v, c] : other.terms_) add_term(v, -c);
  constant_ -= other.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
  } else {
    for (auto& [v, c] : terms_) c *= s;
  }
  constant_ *= s;
  return *this;
}

void QuadExpr::add_quad_term(VarId a, VarId b, double coefficient) {
  if (coefficient == 0.0) return;
  auto [it, inserted] = quad_.try_emplace(canonical(a, b), coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) quad_.erase(it);
  }
}

double QuadExpr::quad_coefficient(VarId a, VarId b) const {
  auto it = quad_.find(canonical(a, b));
  return it == quad_.end() ? 0.0 : it->second;
}

QuadExpr& QuadExpr::operator+=(const QuadExpr& other) {
  for (const auto& [k, c] : other.quad_) add_quad_term(k.first, k.second, c);
  affine_ += other.affine_;
  return *this;
}

QuadExpr& QuadExpr::operator-=(const QuadExpr& other) {
  for (const auto& [k, c] : other.quad_) add_quad_term(k.first, k.second, -c);
  affine_ -= other.affine_;
  return *this;
}

QuadExpr& QuadExpr::operator*=(double s) {
  if (s == 0.0) {
    quad_.clear();
  } else {
    for (auto& [k, c] : quad_) c *= s;
  }
  affine_ *= s;
  return *this;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
AffineExpr operator+(AffineExpr a, double c) {
  a.add_constant(c);
  return a;
}
AffineExpr operator-(AffineExpr a, double c) {
  a.add_constant(-c);
  return a;
}
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
AffineExpr operator*(AffineExpr a, double s) { return a *= s; }

QuadExpr operator+(QuadExpr a, const QuadExpr& b) { return a += b; }
QuadExpr operator-(QuadExpr a, const QuadExpr& b) { return a -= b; }
QuadExpr operator-(QuadExpr a) { return a *= -1.0; }
QuadExpr operator+(QuadExpr a, double c) {
  a.add_constant(c);
  return a;
}
QuadExpr operator*(double s, QuadExpr a) { return a *= s; }
QuadExpr operator*(QuadExpr a, double s) { return a *= s; }

QuadExpr operator*(const AffineExpr& a, const AffineExpr& b) {
  QuadExpr out;
  for (const auto& [va, ca] : a.terms()) {
    for (const auto& [vb, cb] : b.terms()) out.add_quad_term(va, vb, ca * cb);
  }
  for (const auto& [va, ca] : a.terms()) out.add_term(va, ca * b.constant());
  for (const auto& [vb, cb] : b.terms()) out.add_term(vb, cb * a.constant());
  out.add_constant(a.constant() * b.constant());
  return out;
}

void Assignment::set(VarId v, double value) {
  if (v.index < 0) throw Error(ErrorCode::kUnknownVariable, "negative variable index");
  if (static_cast<std::size_t>(v.index) >= size()) resize(static_cast<std::size_t>(v.index) + 1);
  values_[v.index] = value;
}

bool Assignment::has(VarId v) const {
  return v.index >= 0 && static_cast<std::size_t>(v.index) < size() && !std::isnan(values_[v.index]);
}

double Assignment::get(VarId v) const {
  if (!has(v)) {
    throw Error(ErrorCode::kMissingAssignment, "no value for variable " + std::to_string(v.index));
  }
  return values_[v.index];
}

void Assignment::resize(std::size_t size) {
  const auto old = values_.size();
  values_.conservativeResize(static_cast<Eigen::Index>(size));
  for (Eigen::Index i = old; i < values_.size(); ++i) {
    values_[i] = std::numeric_limits<double>::quiet_NaN();
  }
}

double evaluate(const AffineExpr& expr, const Assignment& point) {
  double sum = expr.constant();
  for (const auto& [v, c] : expr.terms()) sum += c * point.get(v);
  return sum;
}

double evaluate(const QuadExpr& expr, const Assignment& point) {
  double sum = evaluate(expr.affine(), point);
  for (const auto& [k, c] : expr.quad_terms()) sum += c * point.get(k.first) * point.get(k.second);
  return sum;
}

std::ostream& operator<<(std::ostream& os, const AffineExpr& e) {
  bool first = true;
  for (const auto& [v, c] : e.terms()) {
    os << (first ? "" : " + ") << c << "*" << v;
    first = false;
  }
  if (first || e.constant() != 0.0) os << (first ? "" : " + ") << e.constant();
  return os;
}

std::ostream& operator<<(std::ostream& os, const QuadExpr& e) {
  for (const auto& [k, c] : e.quad_terms()) os << c << "*" << k.first << "*" << k.second << " + ";
  return os << e.affine();
}

}  // namespace bilevel
