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

#include "bilevel/oracle.hpp"

#include <cmath>
#include <map>
#include <optional>

#include "bilevel/dense_simplex.hpp"
#include "bilevel/error.hpp"
#include "bilevel/refsolver.hpp"

namespace bilevel {

GridSpec GridSpec::standard() {
  GridSpec g;
  g.c_values.push_back(0.0);
  for (int k = 0; k <= 20; ++k) g.c_values.push_back(std::pow(10.0, -3.0 + 6.0 * k / 20.0));
  for (int k = 0; k <= 20; ++k) g.eps_values.push_back(2.0 * k / 20.0);
  return g;
}

LowerSolution solve_lower(const BilevelModel& model, const KktSystem& kkt, const Assignment& upper) {
  const auto& lower = kkt.lower_vars;
  std::map<VarId, int> local;
  for (std::size_t i = 0; i < lower.size(); ++i) local.emplace(lower[i], static_cast<int>(i));
  auto is_lower = [&](VarId v) { return local.count(v) > 0; };
  auto loc = [&](VarId v) { return VarId{local.at(v)}; };

  // Fix the upper variables inside the lower objective.
  const QuadExpr f = lower_primal_objective(model);
  QuadExpr obj(f.affine().constant());
  for (const auto& [key, c] : f.quad_terms()) {
    const auto [a, b] = key;
    if (is_lower(a) && is_lower(b)) obj.add_quad_term(loc(a), loc(b), c);
    else if (is_lower(a)) obj.add_term(loc(a), c * upper.get(b));
    else if (is_lower(b)) obj.add_term(loc(b), c * upper.get(a));
    else obj.add_constant(c * upper.get(a) * upper.get(b));
  }
  for (const auto& [v, c] : f.affine().terms()) {
    if (is_lower(v)) obj.add_term(loc(v), c);
    else obj.add_constant(c * upper.get(v));
  }

  ConvexSubproblem p;
  p.num_variables = lower.size();
  p.objective = std::move(obj);
  std::map<ConstraintId, std::size_t> row_of;
  for (const auto& con : model.constraints()) {
    if (con.level != Level::kLower) continue;
    AffineExpr body;
    double rhs = con.rhs;
    for (const auto& [v, c] : con.body.affine().terms()) {
      if (is_lower(v)) body.add_term(loc(v), c);
      else rhs -= c * upper.get(v);
    }
    row_of.emplace(con.id, p.rows.size());
    p.rows.push_back({std::move(body), con.sense, rhs, con.name});
  }
  p.lower.resize(static_cast<Eigen::Index>(lower.size()));
  p.upper.resize(static_cast<Eigen::Index>(lower.size()));
  for (std::size_t i = 0; i < lower.size(); ++i) {
    p.lower[static_cast<Eigen::Index>(i)] = model.variable(lower[i]).lower_bound;
    p.upper[static_cast<Eigen::Index>(i)] = model.variable(lower[i]).upper_bound;
  }

  const ConvexSolution sol = solve_convex(p);
  if (sol.status != ConvexStatus::kOptimal) {
    throw Error(ErrorCode::kBilevelInfeasible, "lower level has no optimum at the given upper values");
  }

  LowerSolution out;
  out.point = Assignment(kkt.num_variables());
  for (std::size_t i = 0; i < kkt.num_primal; ++i) {
    const VarId v{static_cast<std::int32_t>(i)};
    if (!is_lower(v) && upper.has(v)) out.point.set(v, upper.get(v));
  }
  for (std::size_t i = 0; i < lower.size(); ++i) out.point.set(lower[i], sol.primal[static_cast<Eigen::Index>(i)]);
  for (const auto& d : kkt.duals) {
    double value = 0.0;
    switch (d.source) {
      case DualSource::kConstraint: value = sol.row_dual[static_cast<Eigen::Index>(row_of.at(d.constraint))]; break;
      case DualSource::kLowerBound: value = sol.lower_dual[local.at(d.variable)]; break;
      case DualSource::kUpperBound: value = sol.upper_dual[local.at(d.variable)]; break;
    }
    out.point.set(d.id, value);
  }
  out.objective = sol.objective;
  out.residual = kkt_residual(kkt, out.point);
  return out;
}

OracleResult grid_search(const SvrInstance& inst, const GridSpec& grid) {
  if (grid.c_values.empty() || grid.eps_values.empty()) {
    throw Error(ErrorCode::kInvalidInstance, "grid must be nonempty");
  }
  const SvrModel svr = build_bilevel(inst);
  const KktSystem kkt = build_kkt(svr.model);
  OracleResult best;
  best.certificate = Certificate::kGridFeasible;
  bool have = false;
  std::int64_t count = 0;
  for (double c : grid.c_values) {
    for (double eps : grid.eps_values) {
      if (c < 0.0 || eps < 0.0) throw Error(ErrorCode::kInvalidInstance, "grid values must be nonnegative");
      Assignment up(kkt.num_variables());
      up.set(svr.c, c);
      up.set(svr.eps, eps);
      LowerSolution low = solve_lower(svr.model, kkt, up);
      ++count;
      Eigen::VectorXd w(inst.features);
      for (int j = 0; j < inst.features; ++j) w[j] = low.point[svr.w[static_cast<std::size_t>(j)]];
      const double loss = upper_loss(inst, w);
      if (have && !(loss < best.objective)) continue;
      have = true;
      best.objective = loss;
      for (std::size_t k = 0; k < inst.out_idx.size(); ++k) {
        const int i = inst.out_idx[k];
        low.point.set(svr.xi_upper[k], std::abs(inst.y[i] - inst.x.row(i).dot(w)));
      }
      best.point = std::move(low.point);
    }
  }
  best.subproblems = count;
  return best;
}

namespace {

class PatternSearch {
 public:
  PatternSearch(const BilevelModel& model, const KktSystem& kkt, const PatternOptions& opts)
      : kkt_(kkt), opts_(opts) {
    const auto n = static_cast<Eigen::Index>(kkt.num_variables());
    const auto& obj = model.upper_objective();
    if (!obj.expr.is_affine()) throw Error(ErrorCode::kQuadraticUnsupported, "upper objective must be affine");
    sign_ = obj.sense == ObjSense::kMin ? 1.0 : -1.0;
    offset_ = obj.expr.affine().constant();
    lp_.cost = Eigen::VectorXd::Zero(n);
    for (const auto& [v, c] : obj.expr.affine().terms()) lp_.cost[v.index] = sign_ * c;
    lp_.col_lower.resize(n);
    lp_.col_upper.resize(n);
    for (const auto& v : model.variables()) {
      lp_.col_lower[v.id.index] = v.lower_bound;
      lp_.col_upper[v.id.index] = v.upper_bound;
    }
    for (const auto& d : kkt.duals) {
      lp_.col_lower[d.id.index] = d.nonnegative ? 0.0 : -kInf;
      lp_.col_upper[d.id.index] = kInf;
    }

    std::vector<AffineExpr> rows;
    std::vector<double> lo, hi;
    auto add = [&](const AffineExpr& body, double l, double h) {
      rows.push_back(body);
      lo.push_back(l - body.constant());
      hi.push_back(h - body.constant());
    };
    for (const auto& con : model.constraints()) {
      if (con.level != Level::kUpper) continue;
      if (!con.body.is_affine()) {
        throw Error(ErrorCode::kQuadraticUnsupported, "upper constraint '" + con.name + "' is not affine");
      }
      add(con.body.affine(), con.sense == Sense::kLE ? -kInf : con.rhs, con.sense == Sense::kGE ? kInf : con.rhs);
    }
    for (const auto& s : kkt.stationarity) add(s, 0.0, 0.0);
    for (const auto& e : kkt.equalities) add(e, 0.0, 0.0);
    first_pair_row_ = static_cast<Eigen::Index>(rows.size());
    for (const auto& pair : kkt.pairs) add(pair.slack, 0.0, kInf);

    const auto m = static_cast<Eigen::Index>(rows.size());
    lp_.A = Eigen::MatrixXd::Zero(m, n);
    lp_.row_lower.resize(m);
    lp_.row_upper.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (const auto& [v, c] : rows[static_cast<std::size_t>(r)].terms()) lp_.A(r, v.index) = c;
      lp_.row_lower[r] = lo[static_cast<std::size_t>(r)];
      lp_.row_upper[r] = hi[static_cast<std::size_t>(r)];
    }
  }

  OracleResult run() {
    const int p = static_cast<int>(kkt_.pairs.size());
    if (p > opts_.max_pairs) {
      throw Error(ErrorCode::kPatternCapExceeded, std::to_string(p) + " pairs exceed the cap of " +
                                                      std::to_string(opts_.max_pairs));
    }
    if (opts_.prune) {
      descend(p - 1, 0, lp_, nullptr);
    } else {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
        DenseLp<double> lp = lp_;
        for (int k = 0; k < p; ++k) fix(lp, k, (mask >> k) & 1U);
        leaf(mask, lp, nullptr);
      }
    }
    if (!best_) throw Error(ErrorCode::kBilevelInfeasible, "every complementarity pattern is infeasible");
    const Candidate* pick = nullptr;
    for (const auto& c : candidates_) {
      if (c.objective <= *best_ + kTie && (!pick || c.mask < pick->mask)) pick = &c;
    }
    OracleResult out;
    out.certificate = Certificate::kPatternExact;
    out.pattern = pick->mask;
    out.objective = sign_ * pick->objective + offset_;
    out.point = Assignment(kkt_.num_variables());
    for (Eigen::Index j = 0; j < pick->x.size(); ++j) out.point.set(VarId{static_cast<std::int32_t>(j)}, pick->x[j]);
    out.subproblems = solves_;
    out.unbounded_patterns = unbounded_;
    return out;
  }

 private:
  void fix(DenseLp<double>& lp, int k, bool slack_zero) const {
    if (slack_zero) {
      const Eigen::Index r = first_pair_row_ + k;
      lp.row_upper[r] = lp.row_lower[r];
    } else {
      const Eigen::Index c = kkt_.pairs[static_cast<std::size_t>(k)].dual.index;
      lp.col_upper[c] = 0.0;
    }
  }

  static constexpr double kTie = 1e-9;

  // The highest pair is fixed first, dual side (bit 0) before slack side.
  void descend(int k, std::uint64_t mask, const DenseLp<double>& lp, const std::vector<BasisState>* basis) {
    if (k < 0) {
      leaf(mask, lp, basis);
      return;
    }
    for (int side = 0; side < 2; ++side) {
      DenseLp<double> child = lp;
      fix(child, k, side == 1);
      const std::uint64_t child_mask = mask | (static_cast<std::uint64_t>(side) << k);
      if (k == 0) {
        leaf(child_mask, child, basis);
        continue;
      }
      const auto sol = solve_lp(child, SimplexOptions{}, basis);
      ++solves_;
      if (sol.status == LpStatus::kInfeasible) continue;
      if (sol.status == LpStatus::kOptimal && best_ && sol.objective > *best_ + kTie) continue;
      if (sol.status != LpStatus::kOptimal && sol.status != LpStatus::kUnbounded) {
        throw Error(ErrorCode::kNumerical, "pattern LP failed");
      }
      descend(k - 1, child_mask, child, sol.status == LpStatus::kOptimal ? &sol.basis : basis);
    }
  }

  void leaf(std::uint64_t mask, const DenseLp<double>& lp, const std::vector<BasisState>* basis) {
    const auto sol = solve_lp(lp, SimplexOptions{}, basis);
    ++solves_;
    if (sol.status == LpStatus::kInfeasible) return;
    if (sol.status == LpStatus::kUnbounded) {
      ++unbounded_;
      return;
    }
    if (sol.status != LpStatus::kOptimal) throw Error(ErrorCode::kNumerical, "pattern LP failed");
    if (best_ && sol.objective > *best_ + kTie) return;
    if (!best_ || sol.objective < *best_) best_ = sol.objective;
    candidates_.push_back({mask, sol.objective, sol.x});
  }

  struct Candidate {
    std::uint64_t mask;
    double objective;
    Eigen::VectorXd x;
  };

  const KktSystem& kkt_;
  PatternOptions opts_;
  DenseLp<double> lp_;
  Eigen::Index first_pair_row_ = 0;
  double sign_ = 1.0;
  double offset_ = 0.0;
  std::optional<double> best_;
  std::vector<Candidate> candidates_;
  std::int64_t solves_ = 0;
  std::int64_t unbounded_ = 0;
};

}  // namespace

OracleResult enumerate_patterns(const BilevelModel& model, const KktSystem& kkt, const PatternOptions& opts) {
  if (kkt.num_primal != model.num_variables()) {
    throw Error(ErrorCode::kInvalidModel, "KKT system was derived from a different model");
  }
  return PatternSearch(model, kkt, opts).run();
}

}  // namespace bilevel
