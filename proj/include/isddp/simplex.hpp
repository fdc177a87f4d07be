// Dense revised simplex on standard-form LPs:  min c'z  s.t.  G z = h,  z >= 0.
//
// Both the primal method (two phases, artificial crash) and the dual method
// (from a caller-supplied dual-feasible basis) are provided. Every basis the
// method visits in its feasible phase is reported to an optional observer so
// callers can pick an earlier, suboptimal but feasible vertex afterwards.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isddp {

using Index = Eigen::Index;

struct Tolerances {
  double feas = 1e-9;    // primal/dual feasibility and optimality tests
  double pivot = 1e-11;  // smallest admissible pivot element
};

struct SimplexOptions {
  Tolerances tol;
  std::size_t max_pivots = 0;          // 0: 100 * (rows + cols) + 1000
  std::size_t bland_after_factor = 50; // switch to Bland after factor * num_vars degenerate pivots
  std::size_t refactor_every = 32;
};

/// Raised when the kernel cannot finish: pivot budget exhausted or a singular basis.
class SolverFault : public std::runtime_error {
 public:
  SolverFault(const std::string& what, std::vector<Index> basis = {},
              double objective = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), basis_(std::move(basis)), objective_(objective) {}

  const std::vector<Index>& basis() const { return basis_; }
  double objective() const { return objective_; }

 private:
  std::vector<Index> basis_;
  double objective_;
};

namespace simplex {

enum class Outcome { Optimal, Infeasible, Unbounded, Stopped };

/// Observer of feasible bases. Receives the objective c_B' z_B and the basis;
/// returning true stops the method with Outcome::Stopped.
using IterateObserver = std::function<bool(double objective, std::span<const Index> basis)>;

class RevisedSimplex {
 public:
  RevisedSimplex(Eigen::MatrixXd matrix, Eigen::VectorXd rhs, Eigen::VectorXd cost,
                 SimplexOptions options = {})
      : matrix_(std::move(matrix)),
        rhs_(std::move(rhs)),
        cost_(std::move(cost)),
        opts_(options),
        rows_(matrix_.rows()),
        cols_(matrix_.cols()) {
    if (rhs_.size() != rows_ || cost_.size() != cols_) {
      throw std::invalid_argument("RevisedSimplex: dimension mismatch");
    }
    row_sign_ = Eigen::VectorXd::Ones(rows_);
    for (Index i = 0; i < rows_; ++i) {
      if (rhs_(i) < 0.0) {
        row_sign_(i) = -1.0;
        matrix_.row(i) *= -1.0;
        rhs_(i) = -rhs_(i);
      }
    }
    if (opts_.max_pivots == 0) {
      opts_.max_pivots = 100 * static_cast<std::size_t>(rows_ + cols_) + 1000;
    }
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  /// Phase 1 from an artificial crash basis, then phase 2. The observer is
  /// called for the first phase-2 basis and after every phase-2 pivot.
  Outcome solve_primal(const IterateObserver& observe = {}) {
    crash_with_artificials();
    if (num_artificial_ > 0) {
      phase_cost_ = Eigen::VectorXd::Zero(cols_ + num_artificial_);
      phase_cost_.tail(num_artificial_).setOnes();
      const Outcome p1 = primal_loop({});
      if (p1 == Outcome::Unbounded) throw SolverFault("phase 1 reported unbounded", basis_);
      if (objective() > opts_.tol.feas * (1.0 + rhs_.lpNorm<Eigen::Infinity>())) {
        return Outcome::Infeasible;
      }
      drive_out_artificials();
    }
    phase_cost_ = Eigen::VectorXd::Zero(cols_ + num_artificial_);
    phase_cost_.head(cols_) = cost_;
    return primal_loop(observe);
  }

  /// Dual simplex from `start`, which must be dual feasible (reduced costs >= 0).
  /// The observer sees every basis, starting with `start`.
  Outcome solve_dual(std::vector<Index> start, const IterateObserver& observe = {}) {
    num_artificial_ = 0;
    set_basis(std::move(start));
    phase_cost_ = cost_;
    return dual_loop(observe);
  }

  /// Installs a basis of structural columns and refactors.
  void set_basis(std::vector<Index> basis) {
    if (static_cast<Index>(basis.size()) != rows_) {
      throw std::invalid_argument("set_basis: basis size must equal the row count");
    }
    basis_ = std::move(basis);
    rebuild_membership();
    refactor();
  }

  const std::vector<Index>& basis() const { return basis_; }
  std::size_t pivots() const { return pivots_; }
  bool used_bland() const { return bland_; }

  /// Objective under the current phase cost.
  double objective() const {
    double v = 0.0;
    for (Index i = 0; i < rows_; ++i) v += phase_cost_(basis_[i]) * x_basic_(i);
    return v;
  }

  /// Structural primal values (artificials dropped).
  Eigen::VectorXd primal_values() const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(cols_);
    for (Index i = 0; i < rows_; ++i) {
      if (basis_[i] < cols_) z(basis_[i]) = x_basic_(i);
    }
    return z;
  }

  /// Simplex multipliers y with B'y = c_B, expressed for the caller's row signs.
  Eigen::VectorXd multipliers() const {
    Eigen::VectorXd cb(rows_);
    for (Index i = 0; i < rows_; ++i) cb(i) = basis_[i] < cols_ ? cost_(basis_[i]) : 0.0;
    Eigen::VectorXd y = binv_.transpose() * cb;
    return y.cwiseProduct(row_sign_);
  }

  /// Rows whose artificial could not be pivoted out (linearly dependent rows).
  std::vector<Index> redundant_rows() const {
    std::vector<Index> out;
    for (Index i = 0; i < rows_; ++i) {
      if (basis_[i] >= cols_) out.push_back(i);
    }
    return out;
  }

 private:
  Eigen::VectorXd column(Index j) const {
    if (j < cols_) return matrix_.col(j);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(rows_);
    e(artificial_row_[j - cols_]) = 1.0;
    return e;
  }

  void crash_with_artificials() {
    basis_.assign(rows_, -1);
    artificial_row_.clear();
    // Reuse unit columns (+1 in one row, zero elsewhere) as the starting basis.
    for (Index j = 0; j < cols_; ++j) {
      Index hit = -1;
      bool unit = true;
      for (Index i = 0; i < rows_ && unit; ++i) {
        const double a = matrix_(i, j);
        if (a == 0.0) continue;
        if (a == 1.0 && hit < 0) {
          hit = i;
        } else {
          unit = false;
        }
      }
      if (unit && hit >= 0 && basis_[hit] < 0) basis_[hit] = j;
    }
    for (Index i = 0; i < rows_; ++i) {
      if (basis_[i] < 0) {
        basis_[i] = cols_ + static_cast<Index>(artificial_row_.size());
        artificial_row_.push_back(i);
      }
    }
    num_artificial_ = static_cast<Index>(artificial_row_.size());
    rebuild_membership();
    refactor();
  }

  void rebuild_membership() {
    in_basis_.assign(static_cast<std::size_t>(cols_ + num_artificial_), false);
    for (Index b : basis_) {
      if (b < 0 || b >= cols_ + num_artificial_) {
        throw std::invalid_argument("basis index out of range");
      }
      in_basis_[b] = true;
    }
  }

  void refactor() {
    Eigen::MatrixXd bmat(rows_, rows_);
    for (Index i = 0; i < rows_; ++i) bmat.col(i) = column(basis_[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    if (!lu.isInvertible()) throw SolverFault("singular basis", basis_);
    binv_ = lu.inverse();
    x_basic_ = binv_ * rhs_;
    since_refactor_ = 0;
  }

  void pivot(Index leave_row, Index enter, const Eigen::VectorXd& u) {
    const double piv = u(leave_row);
    binv_.row(leave_row) /= piv;
    for (Index i = 0; i < rows_; ++i) {
      if (i != leave_row && u(i) != 0.0) binv_.row(i) -= u(i) * binv_.row(leave_row);
    }
    in_basis_[basis_[leave_row]] = false;
    basis_[leave_row] = enter;
    in_basis_[enter] = true;
    ++pivots_;
    if (++since_refactor_ >= opts_.refactor_every) {
      refactor();
    } else {
      x_basic_ = binv_ * rhs_;
    }
    if (pivots_ > opts_.max_pivots) {
      throw SolverFault("simplex pivot budget exhausted", basis_, objective());
    }
  }

  void note_degenerate(bool degenerate) {
    if (!degenerate) return;
    if (++degenerate_pivots_ > opts_.bland_after_factor * static_cast<std::size_t>(cols_)) {
      bland_ = true;
    }
  }

  Eigen::VectorXd reduced_costs() const {
    Eigen::VectorXd cb(rows_);
    for (Index i = 0; i < rows_; ++i) cb(i) = phase_cost_(basis_[i]);
    const Eigen::VectorXd y = binv_.transpose() * cb;
    Eigen::VectorXd d = phase_cost_.head(cols_) - matrix_.transpose() * y;
    return d;
  }

  bool notify(const IterateObserver& observe) const {
    return observe && observe(objective(), std::span<const Index>(basis_));
  }

  Outcome primal_loop(const IterateObserver& observe) {
    const double tol = opts_.tol.feas;
    if (notify(observe)) return Outcome::Stopped;
    for (;;) {
      const Eigen::VectorXd d = reduced_costs();
      Index enter = -1;
      double best = -tol;
      for (Index j = 0; j < cols_; ++j) {
        if (in_basis_[j] || d(j) >= -tol) continue;
        if (bland_) {
          enter = j;
          break;
        }
        if (d(j) < best) {
          best = d(j);
          enter = j;
        }
      }
      if (enter < 0) return Outcome::Optimal;

      const Eigen::VectorXd u = binv_ * matrix_.col(enter);
      Index leave = -1;
      double step = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows_; ++i) {
        if (u(i) <= opts_.tol.pivot) continue;
        const double ratio = std::max(x_basic_(i), 0.0) / u(i);
        if (leave < 0 || ratio < step - 1e-12) {
          step = ratio;
          leave = i;
        } else if (ratio <= step + 1e-12) {
          const bool better = bland_ ? basis_[i] < basis_[leave] : u(i) > u(leave);
          if (better) {
            step = std::min(step, ratio);
            leave = i;
          }
        }
      }
      if (leave < 0) return Outcome::Unbounded;
      note_degenerate(step <= tol);
      pivot(leave, enter, u);
      if (notify(observe)) return Outcome::Stopped;
    }
  }

  Outcome dual_loop(const IterateObserver& observe) {
    const double tol = opts_.tol.feas;
    if (notify(observe)) return Outcome::Stopped;
    for (;;) {
      Index leave = -1;
      double worst = -tol;
      for (Index i = 0; i < rows_; ++i) {
        if (x_basic_(i) >= -tol) continue;
        if (bland_) {
          if (leave < 0 || basis_[i] < basis_[leave]) leave = i;
        } else if (x_basic_(i) < worst) {
          worst = x_basic_(i);
          leave = i;
        }
      }
      if (leave < 0) return Outcome::Optimal;

      const Eigen::VectorXd d = reduced_costs();
      const Eigen::VectorXd alpha = matrix_.transpose() * binv_.row(leave).transpose();
      Index enter = -1;
      double step = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < cols_; ++j) {
        if (in_basis_[j] || alpha(j) >= -opts_.tol.pivot) continue;
        const double ratio = std::max(d(j), 0.0) / -alpha(j);
        if (enter < 0 || ratio < step - 1e-12) {
          step = ratio;
          enter = j;
        } else if (ratio <= step + 1e-12 && !bland_ && -alpha(j) > -alpha(enter)) {
          step = std::min(step, ratio);
          enter = j;
        }
      }
      // Dual ray: the primal (this standard form) has no feasible point.
      if (enter < 0) return Outcome::Infeasible;
      note_degenerate(step <= tol);
      const Eigen::VectorXd u = binv_ * matrix_.col(enter);
      pivot(leave, enter, u);
      if (notify(observe)) return Outcome::Stopped;
    }
  }

  void drive_out_artificials() {
    for (Index r = 0; r < rows_; ++r) {
      if (basis_[r] < cols_) continue;
      const Eigen::VectorXd row = matrix_.transpose() * binv_.row(r).transpose();
      Index enter = -1;
      double best = 1e-9;
      for (Index j = 0; j < cols_; ++j) {
        if (in_basis_[j]) continue;
        if (std::abs(row(j)) > best) {
          best = std::abs(row(j));
          enter = j;
        }
      }
      if (enter < 0) continue;  // dependent row: artificial stays basic at zero
      const Eigen::VectorXd u = binv_ * matrix_.col(enter);
      pivot(r, enter, u);
    }
  }

  Eigen::MatrixXd matrix_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd cost_;
  SimplexOptions opts_;
  Index rows_;
  Index cols_;
  Eigen::VectorXd row_sign_;

  std::vector<Index> basis_;
  std::vector<bool> in_basis_;
  std::vector<Index> artificial_row_;
  Index num_artificial_ = 0;
  Eigen::VectorXd phase_cost_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_basic_;
  std::size_t pivots_ = 0;
  std::size_t since_refactor_ = 0;
  std::size_t degenerate_pivots_ = 0;
  bool bland_ = false;
};

}  // namespace simplex
}  // namespace isddp
