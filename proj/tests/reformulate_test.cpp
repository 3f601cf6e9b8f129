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

#include "bilevel/reformulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "bilevel/error.hpp"
#include "bilevel/svr.hpp"
#include "test_util.hpp"

namespace bilevel {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

struct Built {
  SvrModel svr;
  KktSystem kkt;
};

Built build(const SvrInstance& inst) {
  Built b{build_bilevel(inst), {}};
  b.kkt = build_kkt(b.svr.model);
  return b;
}

// Known KKT point of the one-sample instance: w = 1, C = 2, dual of the
// "+" row equal to 2.
Assignment one_sample_point(const Built& b) {
  return testing::assign(b.svr.model, b.kkt,
                         {{"C", 2}, {"eps", 0}, {"xi_U_2", 0}, {"w_1", 1}, {"xi_L_1", 0},
                          {"dual_lower_pos_1", 2}, {"dual_lower_neg_1", 0}, {"dual_lb_xi_L_1", 0}});
}

constexpr std::size_t kBaseRows1002 = 10 + 10 + 7;

TEST(Reformulate, BigMCountsOn10By2) {
  const auto b = build(generate_instance(10, 2, 42));
  const auto info = reformulate(b.svr.model, b.kkt, Mode::big_m(100, 100));
  EXPECT_EQ(info.slm.num_binaries(), 15u);
  EXPECT_EQ(info.pair_binaries.size(), 15u);
  EXPECT_EQ(info.slm.linear_constraints().size(), kBaseRows1002 + 30);
  EXPECT_EQ(info.slm.num_variables(), b.kkt.num_variables() + 15);
}

TEST(Reformulate, Sos1CountsOn10By2) {
  const auto b = build(generate_instance(10, 2, 42));
  const auto info = reformulate(b.svr.model, b.kkt, Mode::sos1());
  EXPECT_EQ(info.slm.sos1_sets().size(), 15u);
  EXPECT_EQ(info.pair_slacks.size(), 15u);
  EXPECT_EQ(info.slm.num_binaries(), 0u);
  EXPECT_EQ(info.slm.num_variables(), b.kkt.num_variables() + 15);
  std::set<VarId> members;
  for (const auto& set : info.slm.sos1_sets()) {
    ASSERT_EQ(set.members.size(), 2u);
    EXPECT_EQ(set.weights, (std::vector<double>{1.0, 2.0}));
    for (VarId v : set.members) EXPECT_TRUE(members.insert(v).second);
  }
}

TEST(Reformulate, ProductCountsOn10By2) {
  const auto b = build(generate_instance(10, 2, 42));
  const auto info = reformulate(b.svr.model, b.kkt, Mode::product(0.0, false));
  ASSERT_EQ(info.slm.quadratic_constraints().size(), 15u);
  for (std::size_t k = 0; k < 15; ++k) {
    const auto& q = info.slm.quadratic_constraints()[k];
    EXPECT_EQ(q.role, QuadraticRole::kComplementarity);
    EXPECT_EQ(q.pair, k);
    EXPECT_EQ(q.sense, Sense::kLE);
    EXPECT_EQ(q.rhs, 0.0);
    EXPECT_EQ(q.body, AffineExpr(info.pairs[k].dual) * info.pairs[k].slack);
  }
  EXPECT_EQ(info.slm.disjunctions().size(), 15u);
}

TEST(Reformulate, BaseRowsAlwaysPresent) {
  const auto b = build(testing::one_sample_instance());
  for (const Mode& mode : {Mode::sos1(), Mode::indicator(), Mode::big_m(100, 100),
                           Mode::product(1e-9, false), Mode::strong_duality(false)}) {
    const auto info = reformulate(b.svr.model, b.kkt, mode);
    EXPECT_EQ(info.slm.objective(), b.svr.model.upper_objective().expr.affine());
    int stat = 0, upper = 0, lower = 0;
    for (const auto& row : info.slm.linear_constraints()) {
      stat += row.name.rfind("stat_", 0) == 0;
      upper += row.name.rfind("upper_", 0) == 0;
      lower += row.name.rfind("lower_", 0) == 0;
    }
    EXPECT_EQ(stat, 2) << mode.name();
    EXPECT_EQ(upper, 2) << mode.name();
    EXPECT_EQ(lower, 2) << mode.name();
    for (const auto& d : b.kkt.duals) {
      EXPECT_EQ(info.slm.variable(d.id).lower_bound, 0.0);
      EXPECT_EQ(info.slm.variable(d.id).name, d.name);
    }
  }
}

TEST(ApplySos1, SlackVariableDefinition) {
  const auto b = build(testing::one_sample_instance());
  const auto info = reformulate(b.svr.model, b.kkt, Mode::sos1());
  const VarId s0 = info.pair_slacks.at(0);
  EXPECT_EQ(info.slm.variable(s0).lower_bound, 0.0);
  EXPECT_EQ(info.slm.sos1_sets()[0].members, (std::vector<VarId>{info.pairs[0].dual, s0}));
  // Bare-variable slack (mu, xi) still gets its own variable.
  EXPECT_TRUE(info.pair_slacks.count(2));
  // Row "sdef" reads s0 - slack == 0 after constant folding.
  const auto& def = info.slm.linear_constraints()[6];
  EXPECT_EQ(def.name, "sdef_lower_pos_1");
  EXPECT_EQ(def.sense, Sense::kEQ);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  Assignment p(info.slm.num_variables());
  for (std::size_t i = 0; i < info.slm.num_variables(); ++i) p.set(VarId{static_cast<int>(i)}, u(rng));
  EXPECT_NEAR(evaluate(def.body, p) - def.rhs, p[s0] - evaluate(info.pairs[0].slack, p), 1e-15);
}

TEST(ApplyIndicator, ImplicationsOnBareSlackPair) {
  const auto b = build(testing::one_sample_instance());
  const auto info = reformulate(b.svr.model, b.kkt, Mode::indicator());
  EXPECT_EQ(info.slm.num_binaries(), 3u);
  const auto& inds = info.slm.indicator_constraints();
  ASSERT_EQ(inds.size(), 6u);
  const VarId z = info.pair_binaries.at(2);
  EXPECT_EQ(inds[4].binary, z);
  EXPECT_TRUE(inds[4].active_value);
  EXPECT_EQ(inds[4].body, AffineExpr(info.pairs[2].dual));
  EXPECT_EQ(inds[5].binary, z);
  EXPECT_FALSE(inds[5].active_value);
  EXPECT_EQ(inds[5].body, info.pairs[2].slack);

  // z = 1 keeps points with mu = 0.
  auto p = lift_point(info, one_sample_point(b));
  p.set(z, 1.0);
  EXPECT_LE(max_violation(info.slm, p), 1e-12);
}

TEST(ApplyBigM, RowsAndFeasibilityOfKktPoint) {
  const auto b = build(testing::one_sample_instance());
  const auto info = reformulate(b.svr.model, b.kkt, Mode::big_m(100, 100));
  const auto& rows = info.slm.linear_constraints();
  const VarId z = info.pair_binaries.at(0);
  const auto& dual_row = rows[6];
  EXPECT_EQ(dual_row.body, AffineExpr(info.pairs[0].dual) - 100.0 * AffineExpr(z));
  EXPECT_EQ(dual_row.sense, Sense::kLE);
  EXPECT_EQ(dual_row.rhs, 0.0);
  const auto& slack_row = rows[7];
  EXPECT_EQ(slack_row.sense, Sense::kLE);
  EXPECT_EQ(slack_row.body + (-slack_row.rhs) * AffineExpr(1.0),
            info.pairs[0].slack + 100.0 * AffineExpr(z) - 100.0 * AffineExpr(1.0));

  const auto p = lift_point(info, one_sample_point(b));
  EXPECT_EQ(p[z], 1.0);
  EXPECT_LE(max_violation(info.slm, p), 1e-12);
}

TEST(ApplyBigM, SmallBoundCutsOffKktPoint) {
  const auto b = build(testing::one_sample_instance());
  const auto info = reformulate(b.svr.model, b.kkt, Mode::big_m(1, 1));
  EXPECT_NEAR(max_violation(info.slm, lift_point(info, one_sample_point(b))), 1.0, 1e-12);
}

TEST(ApplyProduct, TauPassThroughAndViolation) {
  const auto b = build(testing::one_sample_instance());
  const auto info = reformulate(b.svr.model, b.kkt, Mode::product(1e-9, false));
  const auto& q = info.slm.quadratic_constraints()[2];
  EXPECT_EQ(q.rhs, 1e-9);
  EXPECT_EQ(q.body, AffineExpr(info.pairs[2].dual) * AffineExpr(b.svr.xi_lower[0]));
  Assignment p(info.slm.num_variables());
  p.set(info.pairs[2].dual, 1.0);
  p.set(b.svr.xi_lower[0], 1.0);
  EXPECT_NEAR(evaluate(q.body, p) - q.rhs, 1.0 - 1e-9, 1e-15);
}

TEST(ApplyStrongDuality, SingleRowTightAtOptimum) {
  const auto b = build(testing::one_sample_instance());
  const auto info = reformulate(b.svr.model, b.kkt, Mode::strong_duality(false));
  ASSERT_EQ(info.slm.quadratic_constraints().size(), 1u);
  const auto& q = info.slm.quadratic_constraints()[0];
  EXPECT_EQ(q.role, QuadraticRole::kStrongDuality);
  const QuadExpr expect = lower_primal_objective(b.svr.model) - lower_dual_objective(b.kkt, b.svr.model);
  EXPECT_EQ(q.body.quad_terms(), expect.quad_terms());
  EXPECT_EQ(q.body.affine().terms(), expect.affine().terms());
  const auto p = lift_point(info, one_sample_point(b));
  EXPECT_NEAR(evaluate(q.body, p) - q.rhs, 0.0, 1e-12);
  EXPECT_LE(max_violation(info.slm, p), 1e-12);
}

TEST(ApplyStrongDuality, VacuousWithoutLowerConstraints) {
  BilevelModel m;
  const VarId u = m.add_variable(Level::kUpper, 0, 1, "u");
  const VarId x = m.add_variable(Level::kLower, -kInf, kInf, "x");
  m.set_objective(Level::kUpper, ObjSense::kMin, AffineExpr(u));
  m.set_objective(Level::kLower, ObjSense::kMin, AffineExpr(x) * AffineExpr(x));
  const auto kkt = build_kkt(m);
  const auto info = reformulate(m, kkt, Mode::strong_duality(false));
  ASSERT_EQ(info.slm.quadratic_constraints().size(), 1u);
  Assignment p(2);
  p.set(u, 0.3);
  p.set(x, 0.0);
  EXPECT_EQ(evaluate(info.slm.quadratic_constraints()[0].body, p), 0.0);
}

TEST(Reformulate, ParameterErrors) {
  const auto b = build(testing::one_sample_instance());
  const auto& m = b.svr.model;
  EXPECT_EQ(code_of([&] { reformulate(m, b.kkt, Mode::big_m(0, 100)); }), ErrorCode::kNonpositiveBigM);
  EXPECT_EQ(code_of([&] { reformulate(m, b.kkt, Mode::big_m(100, -1)); }), ErrorCode::kNonpositiveBigM);
  EXPECT_EQ(code_of([&] { reformulate(m, b.kkt, Mode::product(-1e-3, false)); }), ErrorCode::kInvalidTau);
  EXPECT_EQ(code_of([&] { reformulate(m, b.kkt, Mode::product(0, true)); }),
            ErrorCode::kMissingExpansionParams);
  EXPECT_EQ(code_of([&] { reformulate(m, b.kkt, Mode::strong_duality(true)); }),
            ErrorCode::kMissingExpansionParams);
  ExpansionParams zero_bits;
  zero_bits.bits = 0;
  EXPECT_EQ(code_of([&] { reformulate(m, b.kkt, Mode::product(0, true), zero_bits); }), ErrorCode::kInvalidBits);
}

TEST(Mode, NamesRoundTrip) {
  for (const char* name : {"sos1", "indicator", "bigm", "product", "product-bin", "strong-duality",
                           "strong-duality-bin"}) {
    EXPECT_EQ(parse_mode(name).name(), name);
  }
  EXPECT_EQ(parse_mode("bigm", 7).primal_m, 7.0);
  EXPECT_THROW(parse_mode("fortran"), Error);
}

TEST(BinaryExpansion, GridValues) {
  ExpansionParams p{0.0, 100.0, 2};
  const double d = p.spacing(0.0, 100.0);
  EXPECT_DOUBLE_EQ(d, 100.0 / 3.0);
  EXPECT_NEAR(p.spacing(-100, 100), 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(ExpansionParams{}.spacing(0, 100), 100.0 / 255.0, 1e-15);
}

TEST(BinaryExpansion, SingleBilinearTermCounts) {
  BilevelModel m;
  const VarId c = m.add_variable(Level::kUpper, 0, 100, "C");
  const VarId xi = m.add_variable(Level::kLower, 0, 100, "xi");
  m.set_objective(Level::kUpper, ObjSense::kMin, AffineExpr(c));
  m.set_objective(Level::kLower, ObjSense::kMin, AffineExpr(xi));

  ReformulationInfo info;
  info.num_primal = 2;
  info.slm.add_variable_with_id(c, "C", 0, 100);
  info.slm.add_variable_with_id(xi, "xi", 0, 100);
  info.slm.add_quadratic(AffineExpr(c) * AffineExpr(xi), Sense::kLE, 0.0, "cxi", QuadraticRole::kGeneral);
  binary_expand(info, m, ExpansionParams{});

  EXPECT_TRUE(info.slm.quadratic_constraints().empty());
  ASSERT_EQ(info.expansion_vars.size(), 1u);
  EXPECT_EQ(info.expansion_vars.begin()->first, c);  // upper-level factor is expanded
  EXPECT_EQ(info.slm.num_binaries(), 8u);
  EXPECT_EQ(info.product_vars.size(), 8u);
  int mccormick = 0;
  for (const auto& row : info.slm.linear_constraints()) mccormick += row.name.rfind("mc", 0) == 0;
  EXPECT_EQ(mccormick, 32);
  EXPECT_EQ(info.slm.num_variables(), 2u + 8 + 8);
}

TEST(BinaryExpansion, RejectsUnboundedOrBadBits) {
  BilevelModel m;
  const VarId a = m.add_variable(Level::kUpper, 0, 1, "a");
  const VarId x = m.add_variable(Level::kLower, -kInf, kInf, "x");
  m.set_objective(Level::kUpper, ObjSense::kMin, AffineExpr(a));
  m.set_objective(Level::kLower, ObjSense::kMin, AffineExpr(x));
  ReformulationInfo info;
  info.num_primal = 2;
  info.slm.add_variable_with_id(a, "a", 0, 1);
  info.slm.add_variable_with_id(x, "x", -kInf, kInf);
  info.slm.add_quadratic(AffineExpr(a) * AffineExpr(x), Sense::kLE, 0.0, "ax", QuadraticRole::kGeneral);
  EXPECT_EQ(code_of([&] { binary_expand(info, m, ExpansionParams{0, 1, 0}); }), ErrorCode::kInvalidBits);
  // The partner x has no bounds; the default box clips it to [-100, 100].
  ReformulationInfo copy = info;
  EXPECT_NO_THROW(binary_expand(copy, m, ExpansionParams{}));
  EXPECT_EQ(copy.slm.variable(x).lower_bound, -100.0);
  EXPECT_EQ(code_of([&] { binary_expand(info, m, ExpansionParams{-kInf, kInf, 4}); }),
            ErrorCode::kUnboundedPartner);
}

// At grid points the linearized rows reproduce the original quadratic bodies.
TEST(BinaryExpansionProperty, ExactOnGridPoints) {
  const auto b = build(generate_instance(4, 2, 3));
  const ExpansionParams params{-100, 100, 6};
  for (const Mode& mode : {Mode::product(0, true), Mode::strong_duality(true)}) {
    const auto plain = reformulate(b.svr.model, b.kkt, mode.kind == Mode::Kind::kProduct
                                                           ? Mode::product(0, false)
                                                           : Mode::strong_duality(false));
    const auto info = reformulate(b.svr.model, b.kkt, mode, params);
    EXPECT_TRUE(info.slm.quadratic_constraints().empty());
    EXPECT_TRUE(info.slm.disjunctions().empty());
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> step(0, 63);
    std::uniform_real_distribution<double> u(0, 1);  // inside every clipped box
    for (int t = 0; t < 50; ++t) {
      Assignment point(b.kkt.num_variables());
      for (std::size_t i = 0; i < b.kkt.num_variables(); ++i) {
        const VarId v{static_cast<int>(i)};
        const auto it = info.expansion_vars.find(v);
        if (it != info.expansion_vars.end()) {
          point.set(v, it->second.lower + it->second.delta * step(rng));
        } else {
          point.set(v, u(rng));
        }
      }
      const auto lifted = lift_point(info, point);
      for (const auto& q : plain.slm.quadratic_constraints()) {
        const LinearConstraint* match = nullptr;
        for (const auto& row : info.slm.linear_constraints()) {
          if (row.name == q.name) match = &row;
        }
        ASSERT_NE(match, nullptr) << q.name;
        EXPECT_NEAR(evaluate(match->body, lifted) - match->rhs, evaluate(q.body, point) - q.rhs, 1e-8)
            << q.name;
      }
      for (const auto& row : info.slm.linear_constraints()) {
        if (row.name.rfind("link_", 0) == 0 || row.name.rfind("mc", 0) == 0) {
          const double v = evaluate(row.body, lifted);
          const double viol = row.sense == Sense::kEQ   ? std::abs(v - row.rhs)
                              : row.sense == Sense::kLE ? std::max(0.0, v - row.rhs)
                                                        : std::max(0.0, row.rhs - v);
          EXPECT_LE(viol, 1e-9) << row.name;
        }
      }
    }
  }
}

TEST(ReformulateProperty, CountFormulasOnRandomSizes) {
  for (int s = 2; s <= 6; ++s) {
    for (int f = 1; f <= 3; ++f) {
      const auto b = build(generate_instance(s, f, static_cast<std::uint64_t>(s * 31 + f)));
      const std::size_t pairs = b.kkt.pairs.size();
      const std::size_t n = b.kkt.num_variables();
      const std::size_t base = b.svr.model.constraints().size() + b.kkt.stationarity.size();
      const auto sos = reformulate(b.svr.model, b.kkt, Mode::sos1());
      EXPECT_EQ(sos.slm.num_variables(), n + pairs);
      EXPECT_EQ(sos.slm.linear_constraints().size(), base + pairs);
      EXPECT_EQ(sos.slm.sos1_sets().size(), pairs);
      const auto ind = reformulate(b.svr.model, b.kkt, Mode::indicator());
      EXPECT_EQ(ind.slm.num_binaries(), pairs);
      EXPECT_EQ(ind.slm.indicator_constraints().size(), 2 * pairs);
      EXPECT_EQ(ind.slm.linear_constraints().size(), base);
      const auto bigm = reformulate(b.svr.model, b.kkt, Mode::big_m(100, 100));
      EXPECT_EQ(bigm.slm.num_binaries(), pairs);
      EXPECT_EQ(bigm.slm.linear_constraints().size(), base + 2 * pairs);
      const auto prod = reformulate(b.svr.model, b.kkt, Mode::product(0, false));
      EXPECT_EQ(prod.slm.num_variables(), n);
      EXPECT_EQ(prod.slm.quadratic_constraints().size(), pairs);
      const auto sd = reformulate(b.svr.model, b.kkt, Mode::strong_duality(false));
      EXPECT_EQ(sd.slm.num_variables(), n);
      EXPECT_EQ(sd.slm.quadratic_constraints().size(), 1u);
    }
  }
}

}  // namespace
}  // namespace bilevel
