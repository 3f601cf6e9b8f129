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

#ifndef BILEVEL_LEMKE_HPP_
#define BILEVEL_LEMKE_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bilevel/dense_simplex.hpp"

namespace bilevel {

enum class LcpStatus { kSolved, kRayTermination, kIterationLimit, kNumericalError };

template <typename Scalar = double>
struct LcpSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  LcpStatus status = LcpStatus::kNumericalError;
  Vector z;
  Vector w;
  std::int64_t pivots = 0;
};

/// Lemke's complementary pivoting for  w = M z + q,  w, z >= 0,  w^T z = 0,
/// with covering vector of ones and the lexicographic ratio test, so it
/// terminates on degenerate problems. For positive semidefinite M a ray
/// termination certifies that the LCP has no solution. The final basis is
/// re-solved against the original data before the point is returned.
template <typename Scalar>
LcpSolution<Scalar> solve_lcp(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M,
                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& q,
                              std::int64_t max_pivots = -1, Scalar pivot_tol = Scalar(1e-11)) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = q.size();
  LcpSolution<Scalar> out;
  out.z = Vector::Zero(n);
  out.w = q;
  if (n == 0 || q.minCoeff() >= Scalar(0)) {
    out.status = LcpStatus::kSolved;
    return out;
  }
  if (max_pivots < 0) max_pivots = 50 * (n + 1) + 1000;

  // Columns: w_0..w_{n-1}, z_0..z_{n-1}, z0 (artificial).
  const Eigen::Index artificial = 2 * n;
  Matrix tab(n, 2 * n + 1);
  tab.leftCols(n).setIdentity();
  tab.middleCols(n, n) = -M;
  tab.col(artificial).setConstant(Scalar(-1));
  Vector rhs = q;
  std::vector<Eigen::Index> head(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) head[i] = i;

  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    const Scalar p = tab(row, col);
    tab.row(row) /= p;
    rhs[row] /= p;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == row) continue;
      const Scalar f = tab(i, col);
      if (f == Scalar(0)) continue;
      tab.row(i).noalias() -= f * tab.row(row);
      rhs[i] -= f * rhs[row];
    }
    head[row] = col;
  };

  // Lexicographically smallest row of [rhs, Binv] / col among rows with col > tol.
  auto lex_ratio = [&](const Vector& column) -> Eigen::Index {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (column[i] <= pivot_tol) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      const Scalar a = rhs[i] / column[i];
      const Scalar b = rhs[best] / column[best];
      const Scalar scale = std::max({Scalar(1), std::abs(a), std::abs(b)});
      if (a < b - Scalar(1e-12) * scale) {
        best = i;
        continue;
      }
      if (a > b + Scalar(1e-12) * scale) continue;
      if (head[i] == artificial) {
        best = i;
        continue;
      }
      if (head[best] == artificial) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar ak = tab(i, k) / column[i];
        const Scalar bk = tab(best, k) / column[best];
        if (ak < bk - Scalar(1e-13)) {
          best = i;
          break;
        }
        if (ak > bk + Scalar(1e-13)) break;
      }
    }
    return best;
  };

  // Initial pivot: z0 enters, the row with the lexicographically most negative q leaves.
  Eigen::Index row = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (rhs[i] <= rhs[row]) row = i;
  }
  Eigen::Index leaving_var = head[row];
  pivot(row, artificial);
  ++out.pivots;

  bool solved = false;
  while (out.pivots < max_pivots) {
    const Eigen::Index entering = leaving_var < n ? leaving_var + n : leaving_var - n;
    // The tableau holds B^{-1}[I, -M, -d]: raising the entering variable by t
    // lowers the basic values by t * tab(:, entering).
    const Eigen::Index r = lex_ratio(Vector(tab.col(entering)));
    if (r < 0) {
      out.status = LcpStatus::kRayTermination;
      return out;
    }
    leaving_var = head[r];
    pivot(r, entering);
    ++out.pivots;
    if (leaving_var == artificial) {
      solved = true;
      break;
    }
  }
  if (!solved) {
    out.status = LcpStatus::kIterationLimit;
    return out;
  }

  // Re-solve the final basis against the original columns.
  Matrix basis(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = head[i];
    if (j < n) basis.col(i) = Vector::Unit(n, j);
    else basis.col(i) = -M.col(j - n);
  }
  Eigen::FullPivLU<Matrix> lu(basis);
  Vector values = lu.isInvertible() ? Vector(lu.solve(q)) : rhs;
  if (!values.allFinite()) {
    out.status = LcpStatus::kNumericalError;
    return out;
  }
  // Basic values at roundoff level are degenerate zeros.
  const Scalar noise = Scalar(1e-14) * std::max(Scalar(1), q.cwiseAbs().maxCoeff());
  Vector w = Vector::Zero(n);
  Vector z = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = head[i];
    const Scalar v = values[i] > noise ? values[i] : Scalar(0);
    if (j < n) w[j] = v;
    else z[j - n] = v;
  }
  out.z = z;
  out.w = w;
  out.status = LcpStatus::kSolved;
  return out;
}

/// Convex quadratic program
///
///   min  1/2 x^T P x + c^T x
///   s.t. row_lower <= A x <= row_upper,  col_lower <= x <= col_upper
///
/// with P symmetric positive semidefinite.
template <typename Scalar = double>
struct DenseQp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix P;
  Vector cost;
  Matrix A;
  Vector col_lower;
  Vector col_upper;
  Vector row_lower;
  Vector row_upper;
};

enum class QpStatus { kOptimal, kInfeasible, kUnbounded, kNumericalError };

template <typename Scalar = double>
struct QpSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  QpStatus status = QpStatus::kNumericalError;
  Scalar objective = 0;
  Vector x;
  Vector row_dual;      // P x + c = A^T y + reduced_cost
  Vector reduced_cost;  // >= 0 at a lower bound, <= 0 at an upper bound
  std::int64_t pivots = 0;
};

/// Solves a convex QP through its KKT complementarity problem. Variables are
/// shifted onto the nonnegative orthant (free ones split in two); every
/// finite row side and finite upper bound becomes one `>=` row. A ray
/// termination is classified by a simplex phase one on the constraints.
template <typename Scalar>
QpSolution<Scalar> solve_qp(const DenseQp<Scalar>& qp) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = qp.cost.size();
  const Eigen::Index m = qp.A.rows();
  auto finite = [](Scalar v) { return std::isfinite(static_cast<double>(v)); };

  // x = offset + T y,  y >= 0.
  struct Piece {
    Eigen::Index var;
    Scalar sign;
  };
  std::vector<Piece> pieces;
  Vector offset = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (finite(qp.col_lower[j])) {
      offset[j] = qp.col_lower[j];
      pieces.push_back({j, Scalar(1)});
    } else if (finite(qp.col_upper[j])) {
      offset[j] = qp.col_upper[j];
      pieces.push_back({j, Scalar(-1)});
    } else {
      pieces.push_back({j, Scalar(1)});
      pieces.push_back({j, Scalar(-1)});
    }
  }
  const Eigen::Index ny = static_cast<Eigen::Index>(pieces.size());
  Matrix T = Matrix::Zero(n, ny);
  for (Eigen::Index k = 0; k < ny; ++k) T(pieces[k].var, k) = pieces[k].sign;

  // Rows G y >= h, remembering where each came from.
  enum class Origin { kRowLower, kRowUpper, kColUpper };
  struct RowRef {
    Origin origin;
    Eigen::Index index;
  };
  std::vector<RowRef> refs;
  std::vector<Vector> g_rows;
  std::vector<Scalar> h_vals;
  const Vector a_offset = qp.A * offset;
  const Matrix AT = qp.A * T;
  for (Eigen::Index r = 0; r < m; ++r) {
    if (finite(qp.row_lower[r])) {
      refs.push_back({Origin::kRowLower, r});
      g_rows.push_back(AT.row(r).transpose());
      h_vals.push_back(qp.row_lower[r] - a_offset[r]);
    }
    if (finite(qp.row_upper[r])) {
      refs.push_back({Origin::kRowUpper, r});
      g_rows.push_back(-AT.row(r).transpose());
      h_vals.push_back(-(qp.row_upper[r] - a_offset[r]));
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (finite(qp.col_lower[j]) && finite(qp.col_upper[j])) {
      refs.push_back({Origin::kColUpper, j});
      g_rows.push_back(-T.row(j).transpose());
      h_vals.push_back(-(qp.col_upper[j] - qp.col_lower[j]));
    }
  }
  const Eigen::Index mg = static_cast<Eigen::Index>(refs.size());
  Matrix G(mg, ny);
  Vector h(mg);
  for (Eigen::Index k = 0; k < mg; ++k) {
    G.row(k) = g_rows[k].transpose();
    h[k] = h_vals[k];
  }

  const Matrix Py = T.transpose() * qp.P * T;
  const Vector cy = T.transpose() * (qp.P * offset + qp.cost);
  Matrix M = Matrix::Zero(ny + mg, ny + mg);
  M.topLeftCorner(ny, ny) = Py;
  M.topRightCorner(ny, mg) = -G.transpose();
  M.bottomLeftCorner(mg, ny) = G;
  Vector qv(ny + mg);
  qv << cy, -h;

  QpSolution<Scalar> out;
  const auto lcp = solve_lcp<Scalar>(M, qv);
  out.pivots = lcp.pivots;
  if (lcp.status == LcpStatus::kRayTermination) {
    DenseLp<Scalar> feas;
    feas.A = qp.A;
    feas.cost = Vector::Zero(n);
    feas.col_lower = qp.col_lower;
    feas.col_upper = qp.col_upper;
    feas.row_lower = qp.row_lower;
    feas.row_upper = qp.row_upper;
    const auto phase_one = solve_lp(feas);
    out.status = phase_one.status == LpStatus::kInfeasible ? QpStatus::kInfeasible
                                                           : QpStatus::kUnbounded;
    return out;
  }
  if (lcp.status != LcpStatus::kSolved) return out;

  const Vector y = lcp.z.head(ny);
  const Vector lambda = lcp.z.tail(mg);
  out.x = offset + T * y;
  out.row_dual = Vector::Zero(m);
  for (Eigen::Index k = 0; k < mg; ++k) {
    switch (refs[k].origin) {
      case Origin::kRowLower: out.row_dual[refs[k].index] += lambda[k]; break;
      case Origin::kRowUpper: out.row_dual[refs[k].index] -= lambda[k]; break;
      case Origin::kColUpper: break;  // folded into reduced_cost below
    }
  }
  out.reduced_cost = qp.P * out.x + qp.cost - qp.A.transpose() * out.row_dual;
  out.objective = Scalar(0.5) * out.x.dot(qp.P * out.x) + qp.cost.dot(out.x);
  out.status = QpStatus::kOptimal;
  return out;
}

}  // namespace bilevel

#endif  // BILEVEL_LEMKE_HPP_
