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

#include "bilevel/dense_simplex.hpp"
#include "bilevel/expr.hpp"
#include "bilevel/lemke.hpp"

#include <gtest/gtest.h>

#include <random>

namespace bilevel {
namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

DenseLp<double> make_lp(Matrix A, Vector c, Vector cl, Vector cu, Vector rl, Vector ru) {
  return {std::move(A), std::move(c), std::move(cl), std::move(cu), std::move(rl), std::move(ru)};
}

TEST(DenseSimplexTest, SolvesSmallLp) {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0  -> (1.6, 1.2), obj -2.8
  Matrix A(2, 2);
  A << 1, 2, 3, 1;
  auto lp = make_lp(A, Vector::Constant(2, -1.0), Vector::Zero(2), Vector::Constant(2, kInf),
                    Vector::Constant(2, -kInf), (Vector(2) << 4, 6).finished());
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 1.6, 1e-12);
  EXPECT_NEAR(sol.x[1], 1.2, 1e-12);
  EXPECT_NEAR(sol.objective, -2.8, 1e-12);
  // Duals of <= rows are nonpositive in the cost = A^T y + d convention.
  EXPECT_NEAR(sol.row_dual[0], -0.4, 1e-12);
  EXPECT_NEAR(sol.row_dual[1], -0.2, 1e-12);
}

TEST(DenseSimplexTest, DetectsInfeasibleAndUnbounded) {
  Matrix A(2, 1);
  A << 1, 1;
  auto infeasible = make_lp(A, Vector::Zero(1), Vector::Constant(1, -kInf), Vector::Constant(1, kInf),
                            (Vector(2) << 1, -kInf).finished(), (Vector(2) << kInf, 0).finished());
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::kInfeasible);

  Matrix B(1, 2);
  B << 1, -1;
  auto unbounded = make_lp(B, (Vector(2) << -1, 0).finished(), Vector::Zero(2),
                           Vector::Constant(2, kInf), Vector::Constant(1, -kInf), Vector::Zero(1));
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::kUnbounded);
}

TEST(DenseSimplexTest, HandlesEqualitiesFreeVariablesAndBoundFlips) {
  // min x0 - x1 + 0 x2, x0 + x1 + x2 = 2, x0 free, 0 <= x1 <= 1, x2 in [-1, 1]
  Matrix A(1, 3);
  A << 1, 1, 1;
  auto lp = make_lp(A, (Vector(3) << 1, -1, 0).finished(),
                    (Vector(3) << -kInf, 0, -1).finished(), (Vector(3) << kInf, 1, 1).finished(),
                    Vector::Constant(1, 2.0), Vector::Constant(1, 2.0));
  const auto sol = solve_lp(lp);
  // x0 = 2 - x1 - x2 -> obj = 2 - 2 x1 - x2 -> x1 = 1, x2 = 1, x0 = 0, obj = -1
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -1.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 0.0, 1e-12);
}

// Random feasible bounded LPs: the simplex and the complementarity route
// must agree on the optimal value.
TEST(DenseSimplexTest, AgreesWithLemkeOnRandomLps) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 6;
    const int m = 1 + (trial / 6) % 6;
    Matrix A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = std::round(4 * u(rng)) / 2;  // degenerate-friendly
    Vector x0(n);
    for (int j = 0; j < n; ++j) x0[j] = u(rng);
    const Vector act = A * x0;
    Vector rl(m), ru(m);
    for (int i = 0; i < m; ++i) {
      const int kind = (trial + i) % 3;
      rl[i] = kind == 1 ? -kInf : act[i] - std::abs(u(rng));
      ru[i] = kind == 2 ? kInf : act[i] + (kind == 0 ? 0.0 : std::abs(u(rng)));
      if (kind == 0) rl[i] = ru[i];
    }
    Vector cl = Vector::Constant(n, -2.0), cu = Vector::Constant(n, 2.0);
    if (trial % 4 == 0) cu[0] = kInf, cl[0] = -2.0;
    Vector c(n);
    for (int j = 0; j < n; ++j) c[j] = std::round(4 * u(rng)) / 4;
    if (trial % 4 == 0) c[0] = std::abs(c[0]) + 0.25;  // keep it bounded
    auto lp = make_lp(A, c, cl, cu, rl, ru);
    const auto lp_sol = solve_lp(lp);
    ASSERT_EQ(lp_sol.status, LpStatus::kOptimal) << "trial " << trial;

    DenseQp<double> qp{Matrix::Zero(n, n), c, A, cl, cu, rl, ru};
    const auto qp_sol = solve_qp(qp);
    ASSERT_EQ(qp_sol.status, QpStatus::kOptimal) << "trial " << trial;
    EXPECT_NEAR(lp_sol.objective, qp_sol.objective, 1e-9) << "trial " << trial;
    // Feasibility of the simplex point.
    const Vector ax = A * lp_sol.x;
    for (int i = 0; i < m; ++i) {
      EXPECT_GE(ax[i], rl[i] - 1e-9);
      EXPECT_LE(ax[i], ru[i] + 1e-9);
    }
  }
}

TEST(LemkeTest, SolvesOneSampleLowerLevel) {
  // min w^2 + 10 xi  s.t. xi + w >= 1, xi - w >= -1, xi >= 0  -> w = 1, xi = 0, obj 1
  Matrix P = Matrix::Zero(2, 2);
  P(0, 0) = 2.0;
  Matrix A(2, 2);
  A << 1, 1, -1, 1;
  DenseQp<double> qp{P, (Vector(2) << 0, 10).finished(), A,
                     (Vector(2) << -kInf, 0).finished(), Vector::Constant(2, kInf),
                     (Vector(2) << 1, -1).finished(), Vector::Constant(2, kInf)};
  const auto sol = solve_qp(qp);
  ASSERT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.x[1], 0.0, 1e-12);
  EXPECT_NEAR(sol.objective, 1.0, 1e-12);
  // Stationarity: P x + c - A^T y - d = 0 with d the bound multipliers.
  EXPECT_NEAR(sol.row_dual[0] - sol.row_dual[1], 2.0, 1e-12);
}

TEST(LemkeTest, ClassifiesInfeasibleAndUnbounded) {
  Matrix A(2, 1);
  A << 1, -1;
  DenseQp<double> infeasible{Matrix::Identity(1, 1), Vector::Zero(1), A, Vector::Constant(1, -kInf),
                             Vector::Constant(1, kInf), (Vector(2) << 1, 0).finished(),
                             Vector::Constant(2, kInf)};
  EXPECT_EQ(solve_qp(infeasible).status, QpStatus::kInfeasible);

  Matrix B(1, 2);
  B << 1, 0;
  Matrix P = Matrix::Zero(2, 2);
  P(0, 0) = 1;
  DenseQp<double> unbounded{P, (Vector(2) << 0, -1).finished(), B, Vector::Constant(2, -kInf),
                            Vector::Constant(2, kInf), Vector::Zero(1), Vector::Constant(1, kInf)};
  EXPECT_EQ(solve_qp(unbounded).status, QpStatus::kUnbounded);
}

}  // namespace
}  // namespace bilevel
