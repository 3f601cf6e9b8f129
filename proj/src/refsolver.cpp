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

#include "bilevel/refsolver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>

#include "bilevel/dense_simplex.hpp"
#include "bilevel/error.hpp"
#include "bilevel/lemke.hpp"

namespace bilevel {

namespace {

using Index = Eigen::Index;

double row_lower_of(Sense sense, double rhs) { return sense == Sense::kLE ? -kInf : rhs; }
double row_upper_of(Sense sense, double rhs) { return sense == Sense::kGE ? kInf : rhs; }

void fill_row(Eigen::MatrixXd& a, Index r, const AffineExpr& body) {
  for (const auto& [v, c] : body.terms()) a(r, v.index) += c;
}

}  // namespace

ConvexSolution solve_convex(const ConvexSubproblem& problem, double tol) {
  const auto n = static_cast<Index>(problem.num_variables);
  const auto m = static_cast<Index>(problem.rows.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (const auto& [key, coef] : problem.objective.quad_terms()) {
    const auto [a, b] = key;
    if (a == b) {
      p(a.index, a.index) += 2.0 * coef;
    } else {
      p(a.index, b.index) += coef;
      p(b.index, a.index) += coef;
    }
  }
  for (const auto& [v, coef] : problem.objective.affine().terms()) c[v.index] += coef;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd rl(m), ru(m);
  for (Index r = 0; r < m; ++r) {
    const auto& row = problem.rows[static_cast<std::size_t>(r)];
    fill_row(a, r, row.body);
    rl[r] = row_lower_of(row.sense, row.rhs);
    ru[r] = row_upper_of(row.sense, row.rhs);
  }

  ConvexSolution out;
  Eigen::VectorXd y, d;
  if (p.isZero(0.0)) {
    DenseLp<double> lp{a, c, problem.lower, problem.upper, rl, ru};
    const auto sol = solve_lp(lp);
    switch (sol.status) {
      case LpStatus::kOptimal: break;
      case LpStatus::kInfeasible: out.status = ConvexStatus::kInfeasible; return out;
      case LpStatus::kUnbounded: out.status = ConvexStatus::kUnbounded; return out;
      default: throw Error(ErrorCode::kNumerical, "simplex failed on convex subproblem");
    }
    out.primal = sol.x;
    y = sol.row_dual;
    d = sol.reduced_cost;
  } else {
    if (n > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p, Eigen::EigenvaluesOnly);
      const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
      if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
        throw Error(ErrorCode::kInvalidModel, "convex subproblem objective is not PSD");
      }
    }
    DenseQp<double> qp{p, c, a, problem.lower, problem.upper, rl, ru};
    const auto sol = solve_qp(qp);
    switch (sol.status) {
      case QpStatus::kOptimal: break;
      case QpStatus::kInfeasible: out.status = ConvexStatus::kInfeasible; return out;
      case QpStatus::kUnbounded: out.status = ConvexStatus::kUnbounded; return out;
      default: throw Error(ErrorCode::kNumerical, "complementary pivoting failed on convex subproblem");
    }
    out.primal = sol.x;
    y = sol.row_dual;
    d = sol.reduced_cost;
  }
  out.status = ConvexStatus::kOptimal;
  const Eigen::VectorXd& x = out.primal;
  out.objective = 0.5 * x.dot(p * x) + c.dot(x) + problem.objective.affine().constant();

  // Convert to `g >= 0` multipliers and measure the KKT residuals.
  out.row_dual.resize(m);
  Eigen::VectorXd grad = p * x + c;
  const Eigen::VectorXd ax = a * x;
  KktResidual& res = out.residual;
  for (Index r = 0; r < m; ++r) {
    const auto& row = problem.rows[static_cast<std::size_t>(r)];
    const double sign = row.sense == Sense::kLE ? -1.0 : 1.0;
    const double dual = sign * y[r];
    out.row_dual[r] = dual;
    grad -= dual * sign * a.row(r).transpose();
    const double g = sign * (ax[r] - row.rhs);
    if (row.sense == Sense::kEQ) {
      res.feas_inf = std::max(res.feas_inf, std::abs(g));
    } else {
      res.feas_inf = std::max({res.feas_inf, -g, -dual});
      res.comp_inf = std::max(res.comp_inf, std::abs(dual * g));
    }
  }
  out.lower_dual = Eigen::VectorXd::Zero(n);
  out.upper_dual = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) {
    const bool has_lower = std::isfinite(problem.lower[j]);
    const bool has_upper = std::isfinite(problem.upper[j]);
    if (has_lower && (d[j] > 0.0 || !has_upper)) out.lower_dual[j] = d[j];
    else if (has_upper) out.upper_dual[j] = -d[j];
    grad -= out.lower_dual[j] * Eigen::VectorXd::Unit(n, j);
    grad += out.upper_dual[j] * Eigen::VectorXd::Unit(n, j);
    if (has_lower) {
      const double g = x[j] - problem.lower[j];
      res.feas_inf = std::max({res.feas_inf, -g, -out.lower_dual[j]});
      res.comp_inf = std::max(res.comp_inf, std::abs(out.lower_dual[j] * g));
    }
    if (has_upper) {
      const double g = problem.upper[j] - x[j];
      res.feas_inf = std::max({res.feas_inf, -g, -out.upper_dual[j]});
      res.comp_inf = std::max(res.comp_inf, std::abs(out.upper_dual[j] * g));
    }
  }
  res.stat_inf = n > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (res.stat_inf > tol || res.feas_inf > tol || res.comp_inf > tol) {
    throw Error(ErrorCode::kNumerical, "convex subproblem KKT residual above tolerance (stat " +
                                           std::to_string(res.stat_inf) + ", feas " +
                                           std::to_string(res.feas_inf) + ", comp " +
                                           std::to_string(res.comp_inf) + ")");
  }
  return out;
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kTimeLimit: return "TimeLimit";
    case SolveStatus::kNodeLimit: return "NodeLimit";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kUnbounded: return "Unbounded";
    case SolveStatus::kError: return "Error";
  }
  return "Unknown";
}

double compute_gap(double objective, double bound) {
  return 100.0 * std::abs(objective - bound) / std::max(std::abs(bound), 1e-10);
}

namespace {

// Bound override on a column (row == false) or a row of the node LP.
struct BoundChange {
  bool row = false;
  Index index = 0;
  double lower = 0.0;
  double upper = 0.0;
};

struct Node {
  std::int64_t id = 0;
  double bound = -kInf;
  std::vector<BoundChange> changes;
  std::vector<BasisState> basis;
  Eigen::VectorXd x;
};

// Open nodes keyed by (bound, id): begin() is the best-bound node, ties to
// the lowest id.
using NodeKey = std::pair<double, std::int64_t>;

enum class Eval { kFeasibleLeaf, kBranch, kInfeasible, kUnbounded };

class BranchAndBound {
 public:
  BranchAndBound(const SingleLevelModel& slm, const SolveOptions& opts) : slm_(slm), opts_(opts) {
    build_base();
  }

  SolveResult run();

 private:
  void build_base();
  Eval evaluate_node(Node& node);
  // Returns false when no branching candidate exists at `x`.
  bool branch(const Node& node, std::vector<BoundChange>& left, std::vector<BoundChange>& right) const;
  double slack_value(std::size_t k, const Eigen::VectorXd& x) const {
    return disjunction_rows_[k] >= 0 ? base_.A.row(disjunction_rows_[k]).dot(x) + disjunction_const_[k]
                                     : 0.0;
  }
  bool prunable(double bound) const {
    return have_incumbent_ && bound >= incumbent_ - 1e-9 * std::max(1.0, std::abs(incumbent_));
  }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void record(std::int64_t nodes, double bound);

  const SingleLevelModel& slm_;
  SolveOptions opts_;
  double sign_ = 1.0;  // internal problem is always minimization
  DenseLp<double> base_;
  SimplexWorkspace<double> workspace_;
  std::size_t num_linear_ = 0;
  std::vector<Index> indicator_rows_;
  std::vector<Index> disjunction_rows_;
  std::vector<double> disjunction_const_;
  std::vector<std::vector<std::size_t>> indicators_of_;  // per column
  std::chrono::steady_clock::time_point start_;
  std::int64_t next_id_ = 0;
  std::int64_t evaluated_ = 0;
  bool have_incumbent_ = false;
  double incumbent_ = kInf;
  Eigen::VectorXd incumbent_x_;
  std::vector<SearchEvent> events_;
};

void BranchAndBound::build_base() {
  for (const auto& q : slm_.quadratic_constraints()) {
    if (q.role == QuadraticRole::kGeneral) {
      throw Error(ErrorCode::kQuadraticUnsupported, "general quadratic row '" + q.name + "' is not supported");
    }
  }
  if (!slm_.quadratic_constraints().empty() && slm_.disjunctions().empty()) {
    throw Error(ErrorCode::kQuadraticUnsupported,
                "complementarity rows need matching disjunctions for branching");
  }
  const auto n = static_cast<Index>(slm_.num_variables());
  num_linear_ = slm_.linear_constraints().size();
  const Index m = static_cast<Index>(num_linear_ + slm_.indicator_constraints().size() +
                                     slm_.disjunctions().size());
  sign_ = slm_.objective_sense() == ObjSense::kMin ? 1.0 : -1.0;
  base_.A = Eigen::MatrixXd::Zero(m, n);
  base_.cost = Eigen::VectorXd::Zero(n);
  for (const auto& [v, c] : slm_.objective().terms()) base_.cost[v.index] = sign_ * c;
  base_.col_lower.resize(n);
  base_.col_upper.resize(n);
  for (const auto& v : slm_.variables()) {
    base_.col_lower[v.id.index] = v.lower_bound;
    base_.col_upper[v.id.index] = v.upper_bound;
  }
  base_.row_lower.resize(m);
  base_.row_upper.resize(m);
  Index r = 0;
  for (const auto& row : slm_.linear_constraints()) {
    fill_row(base_.A, r, row.body);
    base_.row_lower[r] = row_lower_of(row.sense, row.rhs);
    base_.row_upper[r] = row_upper_of(row.sense, row.rhs);
    ++r;
  }
  indicators_of_.assign(static_cast<std::size_t>(n), {});
  for (std::size_t k = 0; k < slm_.indicator_constraints().size(); ++k) {
    const auto& ind = slm_.indicator_constraints()[k];
    fill_row(base_.A, r, ind.body);
    base_.row_lower[r] = -kInf;
    base_.row_upper[r] = kInf;
    indicator_rows_.push_back(r++);
    indicators_of_[static_cast<std::size_t>(ind.binary.index)].push_back(k);
  }
  for (const auto& dj : slm_.disjunctions()) {
    fill_row(base_.A, r, dj.slack);
    base_.row_lower[r] = -kInf;
    base_.row_upper[r] = kInf;
    disjunction_const_.push_back(dj.slack.constant());
    disjunction_rows_.push_back(r++);
  }
}

Eval BranchAndBound::evaluate_node(Node& node) {
  DenseLp<double> lp = base_;
  for (const auto& ch : node.changes) {
    auto& lo = ch.row ? lp.row_lower : lp.col_lower;
    auto& hi = ch.row ? lp.row_upper : lp.col_upper;
    lo[ch.index] = std::max(lo[ch.index], ch.lower);
    hi[ch.index] = std::min(hi[ch.index], ch.upper);
  }
  // Indicators whose binary is fixed at the active value become rows.
  for (std::size_t k = 0; k < slm_.indicator_constraints().size(); ++k) {
    const auto& ind = slm_.indicator_constraints()[k];
    const Index col = ind.binary.index;
    const double fixed = ind.active_value ? 1.0 : 0.0;
    if (lp.col_lower[col] == fixed && lp.col_upper[col] == fixed) {
      const Index row = indicator_rows_[k];
      const double rhs = ind.rhs - ind.body.constant();
      lp.row_lower[row] = row_lower_of(ind.sense, rhs);
      lp.row_upper[row] = row_upper_of(ind.sense, rhs);
    }
  }
  ++evaluated_;
  auto sol = solve_lp(lp, SimplexOptions{}, node.basis.empty() ? nullptr : &node.basis, &workspace_);
  if (sol.status == LpStatus::kNumericalError || sol.status == LpStatus::kIterationLimit) {
    // Cold retry with frequent refactors before giving up on the node.
    SimplexOptions careful;
    careful.refactor_interval = 20;
    workspace_.valid = false;
    sol = solve_lp(lp, careful);
  }
  switch (sol.status) {
    case LpStatus::kOptimal: break;
    case LpStatus::kInfeasible: return Eval::kInfeasible;
    case LpStatus::kUnbounded: return Eval::kUnbounded;
    default: throw Error(ErrorCode::kNumerical, "node relaxation failed");
  }
  node.bound = std::max(node.bound, sol.objective);
  node.basis = sol.basis;
  node.x = sol.x;
  std::vector<BoundChange> l, r;
  return branch(node, l, r) ? Eval::kBranch : Eval::kFeasibleLeaf;
}

bool BranchAndBound::branch(const Node& node, std::vector<BoundChange>& left,
                            std::vector<BoundChange>& right) const {
  const Eigen::VectorXd& x = node.x;
  const double tol = opts_.feas_tol;

  // Complementarity disjunctions and SOS1 sets: largest product first.
  double best = 0.0;
  int kind = -1;
  std::size_t which = 0;
  for (std::size_t k = 0; k < slm_.disjunctions().size(); ++k) {
    const double d = x[slm_.disjunctions()[k].dual.index];
    const double s = slack_value(k, x);
    if (std::min(d, s) > tol && d * s > best) {
      best = d * s;
      kind = 0;
      which = k;
    }
  }
  for (std::size_t k = 0; k < slm_.sos1_sets().size(); ++k) {
    const auto& set = slm_.sos1_sets()[k];
    std::vector<double> mags;
    for (VarId v : set.members) mags.push_back(std::abs(x[v.index]));
    if (mags.size() < 2) continue;
    std::sort(mags.rbegin(), mags.rend());
    if (mags[1] > tol && mags[0] * mags[1] > best) {
      best = mags[0] * mags[1];
      kind = 1;
      which = k;
    }
  }
  if (kind == 0) {
    const auto& dj = slm_.disjunctions()[which];
    left.push_back({false, dj.dual.index, -kInf, 0.0});
    right.push_back({true, disjunction_rows_[which], -kInf, -disjunction_const_[which]});
    return true;
  }
  if (kind == 1) {
    const auto& set = slm_.sos1_sets()[which];
    std::vector<std::size_t> order(set.members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return set.weights[a] < set.weights[b]; });
    // Split the nonzero support in half by weight order.
    std::vector<std::size_t> support;
    for (std::size_t i : order) {
      if (std::abs(x[set.members[i].index]) > tol) support.push_back(i);
    }
    const std::size_t half = support.size() / 2;
    const std::size_t cut = support[half - 1];
    bool past = false;
    for (std::size_t i : order) {
      const Index col = set.members[i].index;
      (past ? right : left).push_back({false, col, 0.0, 0.0});
      if (i == cut) past = true;
    }
    return true;
  }

  // Most fractional binary within the highest branch priority.
  best = opts_.int_tol;
  int priority = std::numeric_limits<int>::min();
  Index col = -1;
  for (const auto& v : slm_.variables()) {
    if (!v.binary) continue;
    const double value = x[v.id.index];
    const double frac = std::min(value - std::floor(value), std::ceil(value) - value);
    if (frac <= opts_.int_tol) continue;
    if (v.branch_priority > priority || (v.branch_priority == priority && frac > best)) {
      priority = v.branch_priority;
      best = frac;
      col = v.id.index;
    }
  }
  // Otherwise an unfixed binary whose implied indicator row is violated.
  if (col < 0) {
    best = tol;
    for (std::size_t k = 0; k < slm_.indicator_constraints().size(); ++k) {
      const auto& ind = slm_.indicator_constraints()[k];
      const Index b = ind.binary.index;
      if ((std::round(x[b]) > 0.5) != ind.active_value) continue;
      bool fixed = false;
      for (const auto& ch : node.changes) fixed |= !ch.row && ch.index == b;
      if (fixed) continue;
      const double act = base_.A.row(indicator_rows_[k]).dot(x) + ind.body.constant();
      const double viol = ind.sense == Sense::kLE   ? act - ind.rhs
                          : ind.sense == Sense::kGE ? ind.rhs - act
                                                    : std::abs(act - ind.rhs);
      if (viol > best) {
        best = viol;
        col = b;
      }
    }
  }
  if (col < 0) return false;
  left.push_back({false, col, 0.0, 0.0});
  right.push_back({false, col, 1.0, 1.0});
  return true;
}

void BranchAndBound::record(std::int64_t nodes, double bound) {
  SearchEvent e{nodes, sign_ * bound, have_incumbent_ ? sign_ * incumbent_ : sign_ * kInf};
  if (!events_.empty() && events_.back().bound == e.bound && events_.back().incumbent == e.incumbent) return;
  events_.push_back(e);
}

SolveResult BranchAndBound::run() {
  start_ = std::chrono::steady_clock::now();
  SolveResult result;
  std::map<NodeKey, Node> open;
  // Until the first incumbent, children are taken depth-first from this
  // stack (better bound on top); afterwards selection is best-bound.
  std::vector<NodeKey> dive;

  auto consider = [&](Node&& node, Eval eval) -> std::optional<NodeKey> {
    if (eval == Eval::kInfeasible) return std::nullopt;
    if (eval == Eval::kFeasibleLeaf) {
      if (!have_incumbent_ || node.bound < incumbent_) {
        have_incumbent_ = true;
        incumbent_ = node.bound;
        incumbent_x_ = node.x;
      }
      return std::nullopt;
    }
    if (prunable(node.bound)) return std::nullopt;
    const NodeKey key{node.bound, node.id};
    open.emplace(key, std::move(node));
    return key;
  };
  auto global_bound = [&]() {
    if (open.empty()) return have_incumbent_ ? incumbent_ : kInf;
    const double best = open.begin()->first.first;
    return have_incumbent_ ? std::min(best, incumbent_) : best;
  };

  Node root;
  root.id = next_id_++;
  const Eval root_eval = evaluate_node(root);
  if (root_eval == Eval::kUnbounded) {
    result.status = SolveStatus::kUnbounded;
    result.nodes = evaluated_;
    result.time_s = elapsed();
    return result;
  }
  double root_bound = root.bound;
  const bool root_feasible = root_eval != Eval::kInfeasible;
  if (auto key = consider(std::move(root), root_eval)) dive.push_back(*key);
  record(evaluated_, global_bound());

  SolveStatus status = SolveStatus::kOptimal;
  while (true) {
    if (elapsed() >= opts_.time_limit_s) {
      status = SolveStatus::kTimeLimit;
      break;
    }
    if (open.empty()) break;
    if (have_incumbent_ && compute_gap(incumbent_, global_bound()) <= 100.0 * opts_.gap_tol) break;
    if (evaluated_ >= opts_.node_limit) {
      status = SolveStatus::kNodeLimit;
      break;
    }
    auto it = open.begin();
    if (!have_incumbent_) {
      while (!dive.empty() && !open.count(dive.back())) dive.pop_back();
      if (!dive.empty()) {
        it = open.find(dive.back());
        dive.pop_back();
      }
    }
    Node node = std::move(it->second);
    open.erase(it);
    if (prunable(node.bound)) continue;
    std::vector<BoundChange> left, right;
    branch(node, left, right);
    std::vector<NodeKey> children;
    for (auto* side : {&left, &right}) {
      Node child;
      child.id = next_id_++;
      child.bound = node.bound;
      child.changes = node.changes;
      child.changes.insert(child.changes.end(), side->begin(), side->end());
      child.basis = node.basis;
      const Eval eval = evaluate_node(child);
      if (eval == Eval::kUnbounded) throw Error(ErrorCode::kNumerical, "unbounded node below a bounded root");
      if (auto key = consider(std::move(child), eval)) children.push_back(*key);
    }
    if (!have_incumbent_) {
      // Worse child first so the better one is popped next.
      std::sort(children.begin(), children.end());
      dive.insert(dive.end(), children.rbegin(), children.rend());
    } else {
      dive.clear();
    }
    record(evaluated_, global_bound());
  }

  result.nodes = evaluated_;
  result.events = events_;
  if (have_incumbent_) {
    Assignment point(slm_.num_variables());
    for (Index j = 0; j < incumbent_x_.size(); ++j) point.set(VarId{static_cast<std::int32_t>(j)}, incumbent_x_[j]);
    result.point = std::move(point);
    result.objective = sign_ * incumbent_;
  }
  if (status == SolveStatus::kOptimal && !have_incumbent_) {
    result.status = SolveStatus::kInfeasible;
  } else {
    result.status = status;
    const double bound = root_feasible ? (open.empty() && !have_incumbent_ ? root_bound : global_bound()) : kInf;
    if (std::isfinite(bound)) result.bound = sign_ * bound;
    if (result.objective && result.bound) result.gap_pct = compute_gap(*result.objective, *result.bound);
  }
  result.time_s = elapsed();
  return result;
}

}  // namespace

SolveResult solve_bnb(const SingleLevelModel& slm, const SolveOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  try {
    BranchAndBound bnb(slm, opts);
    return bnb.run();
  } catch (const Error& e) {
    SolveResult r;
    r.status = SolveStatus::kError;
    r.message = e.what();
    r.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }
}

void check_bigm_tightness(SolveResult& result, const ReformulationInfo& info, double margin) {
  if (!result.point || info.mode.kind != Mode::Kind::kBigM) return;
  const Assignment& p = *result.point;
  for (const auto& [pair, z] : info.pair_binaries) {
    (void)z;
    const auto& cp = info.pairs[pair];
    const double dual = p.get(cp.dual);
    const double slack = evaluate(cp.slack, p);
    const bool dual_hit = dual >= info.mode.dual_m * (1.0 - margin);
    const bool slack_hit = slack >= info.mode.primal_m * (1.0 - margin);
    if (!dual_hit && !slack_hit) continue;
    SolveWarning w;
    w.kind = WarningKind::kBigMBoundActive;
    w.pair = pair;
    w.message = "BigMBoundActive: pair " + std::to_string(pair) + " (" +
                info.slm.variable(cp.dual).name + ") " + (dual_hit ? "dual" : "slack") + " at its big-M";
    result.warnings.push_back(std::move(w));
  }
}

}  // namespace bilevel
