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

#ifndef BILEVEL_DENSE_SIMPLEX_HPP_
#define BILEVEL_DENSE_SIMPLEX_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace bilevel {

/// Dense linear program
///
///   min  c^T x
///   s.t. row_lower <= A x <= row_upper
///        col_lower <=   x <= col_upper
///
/// Infinite entries mark absent bounds.
template <typename Scalar = double>
struct DenseLp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix A;
  Vector cost;
  Vector col_lower;
  Vector col_upper;
  Vector row_lower;
  Vector row_upper;

  Eigen::Index num_cols() const { return A.cols(); }
  Eigen::Index num_rows() const { return A.rows(); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kNumericalError };

enum class BasisState : std::uint8_t { kBasic, kAtLower, kAtUpper, kAtZero };

template <typename Scalar = double>
struct LpSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  LpStatus status = LpStatus::kNumericalError;
  Scalar objective = 0;
  Vector x;             // structural values
  Vector row_activity;  // A x
  Vector row_dual;      // y: cost = A^T y + reduced_cost at optimum
  Vector reduced_cost;  // per structural column
  std::vector<BasisState> basis;  // columns first, then row logicals
  std::int64_t iterations = 0;
};

struct SimplexOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::int64_t max_iterations = 100000;
  int refactor_interval = 0;  // updates between refactors; 0 picks max(200, rows / 2)
  int degenerate_switch = 60;  // consecutive degenerate pivots before Bland's rule
};

/// Factorization carried between solves of LPs that share `A` and differ
/// only in bounds and cost. The next solve pivots the cached inverse into
/// its starting basis instead of refactoring when few columns differ.
template <typename Scalar = double>
struct SimplexWorkspace {
  std::vector<Eigen::Index> head;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> binv;
  int since_refactor = 0;
  bool valid = false;
};

namespace detail {

template <typename Scalar>
class BoundedPrimalSimplex {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BoundedPrimalSimplex(const DenseLp<Scalar>& lp, const SimplexOptions& opts)
      : lp_(lp), opts_(opts), n_(lp.num_cols()), m_(lp.num_rows()), total_(n_ + m_) {
    lower_.resize(total_);
    upper_.resize(total_);
    lower_ << lp.col_lower, lp.row_lower;
    upper_ << lp.col_upper, lp.row_upper;
    value_ = Vector::Zero(total_);
    state_.assign(static_cast<std::size_t>(total_), BasisState::kAtLower);
    head_.assign(static_cast<std::size_t>(m_), 0);
  }

  LpSolution<Scalar> run(const std::vector<BasisState>* warm, SimplexWorkspace<Scalar>* ws) {
    LpSolution<Scalar> sol;
    if (!(warm && install_basis(*warm, ws))) install_slack_basis();
    sol.status = iterate(sol.iterations);
    finish(sol);
    if (ws) {
      ws->head = head_;
      ws->binv = binv_;
      ws->since_refactor = since_refactor_;
      ws->valid = sol.status == LpStatus::kOptimal || sol.status == LpStatus::kInfeasible;
    }
    return sol;
  }

 private:
  static constexpr Scalar kInfinity = std::numeric_limits<Scalar>::infinity();

  bool is_structural(Eigen::Index j) const { return j < n_; }

  // Column j of [A | -I].
  Vector column(Eigen::Index j) const {
    if (is_structural(j)) return lp_.A.col(j);
    Vector e = Vector::Zero(m_);
    e[j - n_] = Scalar(-1);
    return e;
  }

  // Binv * column(j) without materializing the logical column.
  Vector ftran(Eigen::Index j) const {
    if (is_structural(j)) return binv_ * lp_.A.col(j);
    return -binv_.col(j - n_);
  }

  Scalar nonbasic_value(Eigen::Index j, BasisState s) const {
    switch (s) {
      case BasisState::kAtLower: return lower_[j];
      case BasisState::kAtUpper: return upper_[j];
      default: return Scalar(0);
    }
  }

  BasisState resting_state(Eigen::Index j, BasisState wanted) const {
    const bool has_lo = std::isfinite(static_cast<double>(lower_[j]));
    const bool has_up = std::isfinite(static_cast<double>(upper_[j]));
    if (wanted == BasisState::kAtUpper && has_up) return BasisState::kAtUpper;
    if (has_lo) return BasisState::kAtLower;
    if (has_up) return BasisState::kAtUpper;
    return BasisState::kAtZero;
  }

  void install_slack_basis() {
    for (Eigen::Index j = 0; j < n_; ++j) {
      state_[j] = resting_state(j, BasisState::kAtLower);
      value_[j] = nonbasic_value(j, state_[j]);
    }
    for (Eigen::Index r = 0; r < m_; ++r) {
      state_[n_ + r] = BasisState::kBasic;
      head_[r] = n_ + r;
    }
    binv_ = -Matrix::Identity(m_, m_);
    recompute_basics();
  }

  bool install_basis(const std::vector<BasisState>& warm, SimplexWorkspace<Scalar>* ws) {
    if (static_cast<Eigen::Index>(warm.size()) != total_) return false;
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < total_; ++j) {
      if (warm[j] == BasisState::kBasic) {
        if (count == m_) return false;
        head_[count++] = j;
        state_[j] = BasisState::kBasic;
      } else {
        state_[j] = resting_state(j, warm[j]);
        value_[j] = nonbasic_value(j, state_[j]);
      }
    }
    if (count != m_) return false;
    if (!(ws && adopt_cached(*ws)) && !refactor()) return false;
    recompute_basics();
    return true;
  }

  // Pivots the cached inverse into the basis listed in head_. Fails (and
  // leaves head_ untouched) when too many columns differ or a swap pivot is
  // small.
  bool adopt_cached(const SimplexWorkspace<Scalar>& ws) {
    if (!ws.valid || ws.binv.rows() != m_ || static_cast<Eigen::Index>(ws.head.size()) != m_) return false;
    std::vector<char> wanted(static_cast<std::size_t>(total_), 0);
    for (Eigen::Index j : head_) wanted[j] = 1;
    std::vector<char> cached(static_cast<std::size_t>(total_), 0);
    for (Eigen::Index j : ws.head) cached[j] = 1;
    std::vector<Eigen::Index> entering;
    for (Eigen::Index j : head_) {
      if (!cached[j]) entering.push_back(j);
    }
    if (ws.since_refactor + static_cast<int>(entering.size()) >= refactor_interval()) return false;
    std::vector<Eigen::Index> head = ws.head;
    Matrix binv = ws.binv;
    std::vector<char> open_row(static_cast<std::size_t>(m_), 0);
    for (Eigen::Index r = 0; r < m_; ++r) open_row[r] = !wanted[head[r]];
    for (Eigen::Index j : entering) {
      const Vector alpha = is_structural(j) ? Vector(binv * lp_.A.col(j)) : Vector(-binv.col(j - n_));
      Eigen::Index leaving = -1;
      Scalar best = 0;
      for (Eigen::Index r = 0; r < m_; ++r) {
        if (open_row[r] && std::abs(alpha[r]) > best) {
          best = std::abs(alpha[r]);
          leaving = r;
        }
      }
      if (leaving < 0 || best < Scalar(1e-7)) return false;
      pivot_inverse(binv, alpha, leaving);
      head[leaving] = j;
      open_row[leaving] = 0;
    }
    head_ = std::move(head);
    binv_ = std::move(binv);
    since_refactor_ = ws.since_refactor + static_cast<int>(entering.size());
    return true;
  }

  // Replaces basis row `leaving` by the column whose ftran is `alpha`.
  static void pivot_inverse(Matrix& binv, const Vector& alpha, Eigen::Index leaving) {
    Vector eta = alpha;
    eta[leaving] -= Scalar(1);
    eta /= alpha[leaving];
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> pivot_row = binv.row(leaving);
    binv.noalias() -= eta * pivot_row;
  }

  bool refactor() {
    if (m_ == 0) {
      binv_.resize(0, 0);
      return true;
    }
    Matrix basis(m_, m_);
    for (Eigen::Index r = 0; r < m_; ++r) basis.col(r) = column(head_[r]);
    // Blocked partial pivoting; a tiny pivot relative to the largest entry
    // marks the basis singular.
    Eigen::PartialPivLU<Matrix> lu(basis);
    const Scalar scale = std::max(Scalar(1), basis.cwiseAbs().maxCoeff());
    if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > Scalar(1e-11) * scale)) return false;
    binv_ = lu.inverse();
    since_refactor_ = 0;
    return true;
  }

  void recompute_basics() {
    // B x_B + N x_N = 0
    Vector rhs = Vector::Zero(m_);
    for (Eigen::Index j = 0; j < total_; ++j) {
      if (state_[j] == BasisState::kBasic || value_[j] == Scalar(0)) continue;
      if (is_structural(j)) {
        rhs.noalias() -= lp_.A.col(j) * value_[j];
      } else {
        rhs[j - n_] += value_[j];
      }
    }
    Vector xb = binv_ * rhs;
    for (Eigen::Index r = 0; r < m_; ++r) value_[head_[r]] = xb[r];
  }

  // A refactor costs O(m^3) against O(m^2) per update, so large bases wait longer.
  int refactor_interval() const {
    if (opts_.refactor_interval > 0) return opts_.refactor_interval;
    return std::max(200, static_cast<int>(m_ / 2));
  }

  // Relative residual of B * binv = I, sampled on the row activities.
  Scalar drift() const {
    const Vector x = value_.head(n_);
    const Scalar scale = std::max(Scalar(1), value_.cwiseAbs().maxCoeff());
    return (lp_.A * x - value_.tail(m_)).cwiseAbs().maxCoeff() / scale;
  }

  Scalar infeasibility(Eigen::Index j) const {
    if (value_[j] < lower_[j] - opts_.primal_tol) return lower_[j] - value_[j];
    if (value_[j] > upper_[j] + opts_.primal_tol) return value_[j] - upper_[j];
    return Scalar(0);
  }

  // Phase cost of the basic variable at row r.
  Scalar basic_cost(Eigen::Index r, bool phase_one) const {
    const Eigen::Index j = head_[r];
    if (!phase_one) return is_structural(j) ? lp_.cost[j] : Scalar(0);
    if (value_[j] < lower_[j] - opts_.primal_tol) return Scalar(-1);
    if (value_[j] > upper_[j] + opts_.primal_tol) return Scalar(1);
    return Scalar(0);
  }

  LpStatus iterate(std::int64_t& iterations) {
    int degenerate_run = 0;
    bool bland = false;
    bool verified = false;
    while (true) {
      if (iterations >= opts_.max_iterations) return LpStatus::kIterationLimit;

      bool phase_one = false;
      for (Eigen::Index r = 0; r < m_ && !phase_one; ++r)
        phase_one = infeasibility(head_[r]) > Scalar(0);

      Vector cb(m_);
      for (Eigen::Index r = 0; r < m_; ++r) cb[r] = basic_cost(r, phase_one);
      Vector y = binv_.transpose() * cb;

      // Pricing.
      Eigen::Index entering = -1;
      Scalar best = 0;
      int direction = 0;
      Vector d_struct = (phase_one ? Vector(Vector::Zero(n_)) : lp_.cost) - lp_.A.transpose() * y;
      for (Eigen::Index j = 0; j < total_; ++j) {
        const BasisState s = state_[j];
        if (s == BasisState::kBasic) continue;
        if (lower_[j] == upper_[j]) continue;
        const Scalar dj = is_structural(j) ? d_struct[j] : y[j - n_];
        int dir = 0;
        if (dj < -opts_.dual_tol && s != BasisState::kAtUpper) dir = 1;
        else if (dj > opts_.dual_tol && s != BasisState::kAtLower) dir = -1;
        if (dir == 0) continue;
        const Scalar score = std::abs(dj);
        if (bland) {
          entering = j;
          direction = dir;
          break;
        }
        if (score > best) {
          best = score;
          entering = j;
          direction = dir;
        }
      }

      if (entering < 0) {
        // Confirm with recomputed values before declaring termination;
        // refactor only when the inverse has drifted.
        if (!verified) {
          recompute_basics();
          if (since_refactor_ > 0 && drift() > Scalar(1e-9)) {
            if (!refactor()) return LpStatus::kNumericalError;
            recompute_basics();
          }
          verified = true;
          continue;
        }
        return phase_one ? LpStatus::kInfeasible : LpStatus::kOptimal;
      }
      verified = false;

      const Vector alpha = ftran(entering);
      const Scalar dir = Scalar(direction);

      // Harris two-pass ratio test. Basic variable r moves at rate -dir*alpha[r]
      // toward `hits_upper ? upper : lower`.
      auto limit = [&](Eigen::Index r, Scalar slack_tol, Scalar& t, bool& hits_upper) -> bool {
        if (std::abs(alpha[r]) <= opts_.pivot_tol) return false;
        const Scalar rate = -dir * alpha[r];
        const Eigen::Index j = head_[r];
        const Scalar x = value_[j];
        Scalar target;
        if (rate < 0) {
          if (x > upper_[j] + opts_.primal_tol) {
            target = upper_[j];
            hits_upper = true;
          } else if (x >= lower_[j] - opts_.primal_tol) {
            target = lower_[j];
            hits_upper = false;
          } else {
            return false;
          }
        } else {
          if (x < lower_[j] - opts_.primal_tol) {
            target = lower_[j];
            hits_upper = false;
          } else if (x <= upper_[j] + opts_.primal_tol) {
            target = upper_[j];
            hits_upper = true;
          } else {
            return false;
          }
        }
        if (!std::isfinite(static_cast<double>(target))) return false;
        t = (std::abs(x - target) + slack_tol) / std::abs(rate);
        if (rate < 0 ? x < target : x > target) t = slack_tol / std::abs(rate);
        return true;
      };

      Scalar t_max = kInfinity;
      const Scalar harris = bland ? Scalar(0) : Scalar(opts_.primal_tol);
      for (Eigen::Index r = 0; r < m_; ++r) {
        Scalar t;
        bool up;
        if (limit(r, harris, t, up)) t_max = std::min(t_max, t);
      }
      Eigen::Index leaving = -1;
      bool leaving_upper = false;
      Scalar step = kInfinity;
      Scalar best_pivot = 0;
      for (Eigen::Index r = 0; r < m_; ++r) {
        Scalar t;
        bool up;
        if (!limit(r, Scalar(0), t, up)) continue;
        if (t > t_max) continue;
        const Scalar piv = std::abs(alpha[r]);
        bool take = false;
        if (leaving < 0) take = true;
        else if (bland) take = t < step || (t == step && head_[r] < head_[leaving]);
        else take = piv > best_pivot;
        if (take) {
          leaving = r;
          leaving_upper = up;
          step = t;
          best_pivot = piv;
        }
      }
      const Scalar own_range = upper_[entering] - lower_[entering];
      const bool flip = std::isfinite(static_cast<double>(own_range)) &&
                        (leaving < 0 || own_range <= step);
      if (leaving < 0 && !flip) {
        if (phase_one) return LpStatus::kNumericalError;
        return LpStatus::kUnbounded;
      }
      if (flip) step = own_range;
      step = std::max(step, Scalar(0));

      if (step <= Scalar(opts_.primal_tol)) {
        if (++degenerate_run >= opts_.degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      value_[entering] += dir * step;
      for (Eigen::Index r = 0; r < m_; ++r) value_[head_[r]] -= dir * step * alpha[r];
      ++iterations;

      if (flip) {
        state_[entering] = direction > 0 ? BasisState::kAtUpper : BasisState::kAtLower;
        value_[entering] = nonbasic_value(entering, state_[entering]);
        continue;
      }

      const Eigen::Index out = head_[leaving];
      state_[out] = resting_state(out, leaving_upper ? BasisState::kAtUpper : BasisState::kAtLower);
      value_[out] = nonbasic_value(out, state_[out]);
      state_[entering] = BasisState::kBasic;
      head_[leaving] = entering;

      pivot_inverse(binv_, alpha, leaving);
      if (++since_refactor_ >= refactor_interval()) {
        if (!refactor()) return LpStatus::kNumericalError;
        recompute_basics();
      }
    }
  }

  void finish(LpSolution<Scalar>& sol) {
    sol.basis = state_;
    sol.x = value_.head(n_);
    sol.row_activity = lp_.A * sol.x;
    Vector cb(m_);
    for (Eigen::Index r = 0; r < m_; ++r) cb[r] = basic_cost(r, false);
    sol.row_dual = binv_.transpose() * cb;
    sol.reduced_cost = lp_.cost - lp_.A.transpose() * sol.row_dual;
    sol.objective = lp_.cost.dot(sol.x);
  }

  const DenseLp<Scalar>& lp_;
  SimplexOptions opts_;
  Eigen::Index n_;
  Eigen::Index m_;
  Eigen::Index total_;
  Vector lower_;
  Vector upper_;
  Vector value_;
  std::vector<BasisState> state_;
  std::vector<Eigen::Index> head_;
  Matrix binv_;
  int since_refactor_ = 0;
};

}  // namespace detail

/// Bounded-variable primal simplex on an explicit dense basis inverse.
/// Phase one minimizes the sum of bound violations of the basic variables;
/// degenerate stalls switch pricing to Bland's rule. `warm_basis`, if given
/// and nonsingular, replaces the all-logical starting basis. `workspace`
/// carries the factorization across calls on the same matrix.
template <typename Scalar>
LpSolution<Scalar> solve_lp(const DenseLp<Scalar>& lp, const SimplexOptions& opts = {},
                            const std::vector<BasisState>* warm_basis = nullptr,
                            SimplexWorkspace<Scalar>* workspace = nullptr) {
  detail::BoundedPrimalSimplex<Scalar> engine(lp, opts);
  return engine.run(warm_basis, workspace);
}

}  // namespace bilevel

#endif  // BILEVEL_DENSE_SIMPLEX_HPP_
