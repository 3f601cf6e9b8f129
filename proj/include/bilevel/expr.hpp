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

#ifndef BILEVEL_EXPR_HPP_
#define BILEVEL_EXPR_HPP_

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <utility>

namespace bilevel {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Opaque variable handle. Handles are dense indices into the owning model.
struct VarId {
  std::int32_t index = -1;

  constexpr auto operator<=>(const VarId&) const = default;
  constexpr bool valid() const { return index >= 0; }
};

std::ostream& operator<<(std::ostream& os, VarId v);

/// Sparse linear form `sum_i c_i x_i + constant`. Zero coefficients are never
/// stored; terms iterate in increasing VarId order.
class AffineExpr {
 public:
  using TermMap = std::map<VarId, double>;

  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}
  AffineExpr(VarId v) { add_term(v, 1.0); }  // NOLINT: implicit by design of the DSL

  void add_term(VarId v, double coefficient);
  void add_constant(double c) { constant_ += c; }
  void set_constant(double c) { constant_ = c; }

  const TermMap& terms() const { return terms_; }
  double constant() const { return constant_; }
  double coefficient(VarId v) const;
  bool has_terms() const { return !terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double s);

  bool operator==(const AffineExpr&) const = default;

 private:
  TermMap terms_;
  double constant_ = 0.0;
};

/// Quadratic form. Keys are stored with `first <= second`, so (a,b) and (b,a)
/// always land on the same entry; a square is keyed (a,a).
class QuadExpr {
 public:
  using Key = std::pair<VarId, VarId>;
  using QuadMap = std::map<Key, double>;

  QuadExpr() = default;
  QuadExpr(AffineExpr affine) : affine_(std::move(affine)) {}  // NOLINT
  explicit QuadExpr(double constant) : affine_(constant) {}

  static Key canonical(VarId a, VarId b) { return a <= b ? Key{a, b} : Key{b, a}; }

  void add_quad_term(VarId a, VarId b, double coefficient);
  void add_term(VarId v, double coefficient) { affine_.add_term(v, coefficient); }
  void add_constant(double c) { affine_.add_constant(c); }

  const QuadMap& quad_terms() const { return quad_; }
  const AffineExpr& affine() const { return affine_; }
  AffineExpr& mutable_affine() { return affine_; }
  double constant() const { return affine_.constant(); }
  double quad_coefficient(VarId a, VarId b) const;
  bool is_affine() const { return quad_.empty(); }

  QuadExpr& operator+=(const QuadExpr& other);
  QuadExpr& operator-=(const QuadExpr& other);
  QuadExpr& operator*=(double s);

  bool operator==(const QuadExpr&) const = default;

 private:
  QuadMap quad_;
  AffineExpr affine_;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a);
AffineExpr operator+(AffineExpr a, double c);
AffineExpr operator-(AffineExpr a, double c);
AffineExpr operator*(double s, AffineExpr a);
AffineExpr operator*(AffineExpr a, double s);

QuadExpr operator+(QuadExpr a, const QuadExpr& b);
QuadExpr operator-(QuadExpr a, const QuadExpr& b);
QuadExpr operator-(QuadExpr a);
QuadExpr operator+(QuadExpr a, double c);
QuadExpr operator*(double s, QuadExpr a);
QuadExpr operator*(QuadExpr a, double s);

/// Product of two affine forms, expanded term by term.
QuadExpr operator*(const AffineExpr& a, const AffineExpr& b);

/// Point values indexed by VarId. Unset entries hold NaN.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::size_t size)
      : values_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size),
                                          std::numeric_limits<double>::quiet_NaN())) {}

  void set(VarId v, double value);
  bool has(VarId v) const;
  /// Throws Error(kMissingAssignment) when `v` has no value.
  double get(VarId v) const;
  double operator[](VarId v) const { return get(v); }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  void resize(std::size_t size);

  const Eigen::VectorXd& values() const { return values_; }

 private:
  Eigen::VectorXd values_;
};

double evaluate(const AffineExpr& expr, const Assignment& point);
double evaluate(const QuadExpr& expr, const Assignment& point);

std::ostream& operator<<(std::ostream& os, const AffineExpr& e);
std::ostream& operator<<(std::ostream& os, const QuadExpr& e);

}  // namespace bilevel

#endif  // BILEVEL_EXPR_HPP_
