// Cuts for cost-to-go functions and the pools that hold them.
#pragma once

#include "isddp/lp_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace isddp {

/// Affine minorant  theta + <beta, x>  of the cost-to-go of `stage`.
struct Cut {
  double theta = 0.0;
  Eigen::VectorXd beta;
  int stage = 0;
  int iteration = 0;
  double eps_used = 0.0;

  double value(const Eigen::VectorXd& x) const { return theta + beta.dot(x); }
};

/// max(floor, max_i cut_i). The floor doubles as cut row 0 of every
/// subproblem built from the pool, so dual vectors mu index [floor, cuts...].
class CutPool {
 public:
  CutPool() = default;
  CutPool(Index state_dim, double floor) : state_dim_(state_dim), floor_(floor) {
    slopes_ = Eigen::MatrixXd::Zero(state_dim, 1);
    intercepts_ = Eigen::VectorXd::Constant(1, floor);
  }

  Index state_dim() const { return state_dim_; }
  double floor() const { return floor_; }
  std::size_t size() const { return cuts_.size(); }
  const std::vector<Cut>& cuts() const { return cuts_; }

  void add(Cut cut) {
    if (cut.beta.size() != state_dim_) throw std::invalid_argument("CutPool::add: slope length");
    const Index k = slopes_.cols();
    slopes_.conservativeResize(Eigen::NoChange, k + 1);
    slopes_.col(k) = cut.beta;
    intercepts_.conservativeResize(k + 1);
    intercepts_(k) = cut.theta;
    cuts_.push_back(std::move(cut));
  }

  double evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != state_dim_) throw std::invalid_argument("CutPool::evaluate: state length");
    return (intercepts_ + slopes_.transpose() * x).maxCoeff();
  }

  /// Epigraph rows including the floor (column 0).
  const Eigen::MatrixXd& row_slopes() const { return slopes_; }
  const Eigen::VectorXd& row_intercepts() const { return intercepts_; }

 private:
  Index state_dim_ = 0;
  double floor_ = 0.0;
  std::vector<Cut> cuts_;
  Eigen::MatrixXd slopes_;
  Eigen::VectorXd intercepts_;
};

inline double evaluate_pool(const CutPool& pool, const Eigen::VectorXd& x) {
  return pool.evaluate(x);
}

/// Right-hand side b and state matrix B of one realization, with its probability.
struct CutRealization {
  const Eigen::VectorXd* b = nullptr;
  const Eigen::MatrixXd* B = nullptr;
  double prob = 1.0;
};

namespace detail {

inline Cut aggregate_cut(std::span<const CutRealization> realizations,
                         std::span<const DualCertificate> duals,
                         const Eigen::VectorXd* next_thetas) {
  if (realizations.empty() || realizations.size() != duals.size()) {
    throw std::invalid_argument("cut: need one dual certificate per realization");
  }
  const Index state_dim = realizations.front().B->cols();
  Cut cut;
  cut.beta = Eigen::VectorXd::Zero(state_dim);
  double total_prob = 0.0;
  for (std::size_t j = 0; j < realizations.size(); ++j) {
    const auto& r = realizations[j];
    const auto& d = duals[j];
    if (r.B->cols() != state_dim || r.b->size() != r.B->rows() ||
        d.lambda.size() != r.b->size()) {
      throw std::invalid_argument("cut: dimension mismatch between realization and dual");
    }
    double theta = r.b->dot(d.lambda);
    if (next_thetas != nullptr) {
      if (d.mu.size() != next_thetas->size()) {
        throw std::invalid_argument("cut: mu length does not match the next-stage pool");
      }
      theta += d.mu.dot(*next_thetas);
    }
    cut.theta += r.prob * theta;
    cut.beta -= r.prob * (r.B->transpose() * d.lambda);
    cut.eps_used = std::max(cut.eps_used, d.eps_certified);
    total_prob += r.prob;
  }
  if (std::abs(total_prob - 1.0) > 1e-9) {
    throw std::invalid_argument("cut: realization probabilities must sum to 1");
  }
  return cut;
}

}  // namespace detail

/// theta = sum_j p_j <b_j, lambda_j>,  beta = -sum_j p_j B_j' lambda_j.
inline Cut build_terminal_cut(std::span<const CutRealization> realizations,
                              std::span<const DualCertificate> duals) {
  return detail::aggregate_cut(realizations, duals, nullptr);
}

/// As build_terminal_cut plus sum_j p_j <mu_j, next_pool_thetas>; mu_j must be
/// ordered like next_pool_thetas (floor first).
inline Cut build_middle_cut(std::span<const CutRealization> realizations,
                            std::span<const DualCertificate> duals,
                            const Eigen::VectorXd& next_pool_thetas) {
  return detail::aggregate_cut(realizations, duals, &next_pool_thetas);
}

}  // namespace isddp
