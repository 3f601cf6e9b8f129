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

#include <gtest/gtest.h>

#include <random>

#include "bilevel/svr.hpp"
#include "test_util.hpp"

namespace bilevel {
namespace {

using testing::assign;
using testing::id_of;

class OneSampleKkt : public ::testing::Test {
 protected:
  SvrModel svr = build_bilevel(testing::one_sample_instance());
  KktSystem kkt = build_kkt(svr.model);
  VarId ap() const { return kkt.duals[0].id; }
  VarId am() const { return kkt.duals[1].id; }
  VarId mu() const { return kkt.duals[2].id; }
};

TEST_F(OneSampleKkt, StationarityMatchesHandDerivation) {
  ASSERT_EQ(kkt.duals.size(), 3u);
  EXPECT_EQ(kkt.duals[0].name, "dual_lower_pos_1");
  EXPECT_EQ(kkt.duals[1].name, "dual_lower_neg_1");
  EXPECT_EQ(kkt.duals[2].name, "dual_lb_xi_L_1");
  ASSERT_EQ(kkt.stationarity.size(), 2u);
  const VarId w = svr.w[0], xi = svr.xi_lower[0];

  AffineExpr stat_w = 2.0 * AffineExpr(w) - AffineExpr(ap()) + AffineExpr(am());
  AffineExpr stat_xi = AffineExpr(svr.c) - AffineExpr(ap()) - AffineExpr(am()) - AffineExpr(mu());
  EXPECT_EQ(kkt.lower_vars[0], w);
  EXPECT_EQ(kkt.stationarity[0], stat_w);
  EXPECT_EQ(kkt.lower_vars[1], xi);
  EXPECT_EQ(kkt.stationarity[1], stat_xi);
}

TEST_F(OneSampleKkt, PairsMatchHandDerivation) {
  ASSERT_EQ(kkt.pairs.size(), 3u);
  const AffineExpr xi(svr.xi_lower[0]), eps(svr.eps), w(svr.w[0]);
  EXPECT_EQ(kkt.pairs[0].dual, ap());
  EXPECT_EQ(kkt.pairs[0].slack, xi + eps + w - 1.0);
  EXPECT_EQ(kkt.pairs[1].dual, am());
  EXPECT_EQ(kkt.pairs[1].slack, xi + eps - w + 1.0);
  EXPECT_EQ(kkt.pairs[2].dual, mu());
  EXPECT_EQ(kkt.pairs[2].slack, xi);
  for (const auto& d : kkt.duals) EXPECT_TRUE(d.nonnegative);
}

TEST_F(OneSampleKkt, ResidualZeroAtKnownKktPoint) {
  auto p = assign(svr.model, kkt,
                  {{"C", 2}, {"eps", 0}, {"xi_U_2", 0}, {"w_1", 1}, {"xi_L_1", 0},
                   {"dual_lower_pos_1", 2}, {"dual_lower_neg_1", 0}, {"dual_lb_xi_L_1", 0}});
  auto r = kkt_residual(kkt, p);
  EXPECT_EQ(r.stat_inf, 0.0);
  EXPECT_EQ(r.feas_inf, 0.0);
  EXPECT_EQ(r.comp_inf, 0.0);

  p.set(ap(), 2.1);
  r = kkt_residual(kkt, p);
  EXPECT_NEAR(r.stat_inf, 0.1, 1e-12);
}

TEST_F(OneSampleKkt, ZeroPointViolatesFeasibilityByOne) {
  Assignment p(kkt.num_variables());
  for (std::size_t i = 0; i < kkt.num_variables(); ++i) p.set(VarId{static_cast<int>(i)}, 0.0);
  EXPECT_DOUBLE_EQ(kkt_residual(kkt, p).feas_inf, 1.0);
}

TEST_F(OneSampleKkt, MissingValueThrows) {
  Assignment p(kkt.num_variables());
  try {
    kkt_residual(kkt, p);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAssignment);
  }
}

// Random points satisfying stationarity: w and mu are solved from the rest.
TEST_F(OneSampleKkt, DualityGapEqualsComplementaritySum) {
  const QuadExpr gap = lower_primal_objective(svr.model) - lower_dual_objective(kkt, svr.model);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double c = u(rng), eps = u(rng), xi = u(rng), a = u(rng), b = u(rng);
    const double w = (a - b) / 2.0, m = c - a - b;
    auto p = assign(svr.model, kkt,
                    {{"C", c}, {"eps", eps}, {"xi_U_2", 0}, {"w_1", w}, {"xi_L_1", xi},
                     {"dual_lower_pos_1", a}, {"dual_lower_neg_1", b}, {"dual_lb_xi_L_1", m}});
    const double comp = a * (xi + eps - 1 + w) + b * (xi + eps + 1 - w) + m * xi;
    EXPECT_NEAR(evaluate(gap, p), comp, 1e-12);
  }
}

TEST(Kkt, InstanceCounts) {
  const auto svr = build_bilevel(generate_instance(10, 2, 1));
  const auto kkt = build_kkt(svr.model);
  EXPECT_EQ(kkt.stationarity.size(), 7u);
  EXPECT_EQ(kkt.pairs.size(), 15u);
}

TEST(Kkt, CountFormulasOnRandomSizes) {
  for (int s = 2; s <= 6; ++s) {
    for (int f = 1; f <= 3; ++f) {
      const auto inst = generate_instance(s, f, static_cast<std::uint64_t>(100 * s + f));
      const auto kkt = build_kkt(build_bilevel(inst).model);
      const std::size_t in = inst.in_idx.size();
      EXPECT_EQ(kkt.stationarity.size(), static_cast<std::size_t>(f) + in);
      EXPECT_EQ(kkt.pairs.size(), 3 * in);
      EXPECT_EQ(kkt.duals.size(), 3 * in);
      EXPECT_EQ(kkt.num_primal, inst.out_idx.size() + 2 + static_cast<std::size_t>(f) + in);
    }
  }
}

TEST(Kkt, EqualityGetsFreeDualWithoutPair) {
  BilevelModel m;
  const VarId u = m.add_variable(Level::kUpper, 0, 10, "u");
  const VarId x = m.add_variable(Level::kLower, -kInf, kInf, "x");
  m.add_constraint(Level::kLower, AffineExpr(x) - AffineExpr(u), Sense::kEQ, 1.0, "link");
  m.set_objective(Level::kUpper, ObjSense::kMin, AffineExpr(x));
  m.set_objective(Level::kLower, ObjSense::kMin, AffineExpr(x) * AffineExpr(x));
  const auto kkt = build_kkt(m);
  ASSERT_EQ(kkt.duals.size(), 1u);
  EXPECT_FALSE(kkt.duals[0].nonnegative);
  EXPECT_EQ(kkt.duals[0].name, "dual_link");
  EXPECT_TRUE(kkt.pairs.empty());
  ASSERT_EQ(kkt.equalities.size(), 1u);
}

TEST(Kkt, NoLowerConstraintsGivesZeroGap) {
  BilevelModel m;
  const VarId u = m.add_variable(Level::kUpper, 0, 10, "u");
  const VarId x = m.add_variable(Level::kLower, -kInf, kInf, "x");
  m.set_objective(Level::kUpper, ObjSense::kMin, AffineExpr(u));
  m.set_objective(Level::kLower, ObjSense::kMin, AffineExpr(x) * AffineExpr(x) - AffineExpr(u) * AffineExpr(x));
  const auto kkt = build_kkt(m);
  EXPECT_TRUE(kkt.pairs.empty());
  // Identity holds modulo stationarity 2x - u = 0.
  const QuadExpr gap = lower_primal_objective(m) - lower_dual_objective(kkt, m);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-5, 5);
  for (int t = 0; t < 10; ++t) {
    Assignment p(kkt.num_variables());
    const double uv = dist(rng);
    p.set(u, uv);
    p.set(x, uv / 2);
    EXPECT_NEAR(evaluate(gap, p), 0.0, 1e-12);
  }
}

TEST(Kkt, InvalidModelThrows) {
  BilevelModel m;
  const VarId x = m.add_variable(Level::kLower, -kInf, kInf, "x");
  m.set_objective(Level::kLower, ObjSense::kMin, -1.0 * (AffineExpr(x) * AffineExpr(x)));
  try {
    build_kkt(m);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidModel);
  }
}

// 100 stationarity-satisfying points per instance; w_j and mu_i are solved
// from the stationarity rows of the SVR lower level.
TEST(KktProperty, DualityGapIdentityOnRandomInstances) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int s = 2; s <= 6; s += 2) {
    for (int f = 1; f <= 3; ++f) {
      const auto inst = generate_instance(s, f, static_cast<std::uint64_t>(7 * s + f));
      const auto svr = build_bilevel(inst);
      const auto kkt = build_kkt(svr.model);
      const QuadExpr gap = lower_primal_objective(svr.model) - lower_dual_objective(kkt, svr.model);
      const std::size_t in = inst.in_idx.size();
      for (int t = 0; t < 100; ++t) {
        Assignment p(kkt.num_variables());
        for (std::size_t i = 0; i < kkt.num_primal; ++i) p.set(VarId{static_cast<int>(i)}, u(rng));
        std::vector<double> a(in), b(in);
        const double c = p[svr.c];
        for (std::size_t k = 0; k < in; ++k) {
          a[k] = u(rng);
          b[k] = u(rng);
          p.set(kkt.pairs[k].dual, a[k]);
          p.set(kkt.pairs[in + k].dual, b[k]);
          p.set(kkt.pairs[2 * in + k].dual, c - a[k] - b[k]);
        }
        for (int j = 0; j < f; ++j) {
          double g = 0.0;
          for (std::size_t k = 0; k < in; ++k) g += (a[k] - b[k]) * inst.x(inst.in_idx[k], j);
          p.set(svr.w[static_cast<std::size_t>(j)], g / 2.0);
        }
        ASSERT_LT(kkt_residual(kkt, p).stat_inf, 1e-12);
        double comp = 0.0;
        for (const auto& pair : kkt.pairs) comp += p[pair.dual] * evaluate(pair.slack, p);
        EXPECT_NEAR(evaluate(gap, p), comp, 1e-9);
      }
    }
  }
}

}  // namespace
}  // namespace bilevel
