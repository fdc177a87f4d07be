// Multistage LP models:  stage t has  A_t x_t + B_t x_{t-1} = b_t,  x_t >= 0,  cost c_t'x_t.
#pragma once

#include "isddp/simplex.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace isddp {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A brute-force computation was refused because the instance exceeds its size guard.
class OracleGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct StageModel {
  Eigen::MatrixXd A;  // num_eq x var_dim
  Eigen::MatrixXd B;  // num_eq x state_dim
  Eigen::VectorXd b;
  Eigen::VectorXd c;

  Index num_eq() const { return A.rows(); }
  Index var_dim() const { return A.cols(); }
  Index state_dim() const { return B.cols(); }

  void validate(const std::string& where) const {
    if (B.rows() != A.rows() || b.size() != A.rows() || c.size() != A.cols()) {
      throw ModelError(where + ": stage matrices have inconsistent dimensions");
    }
  }
};

struct DeterministicModel {
  std::vector<StageModel> stages;  // t = 1..T
  Eigen::VectorXd x0;
  std::vector<double> floors;      // floors[i] bounds the cost-to-go of stage i + 2

  int horizon() const { return static_cast<int>(stages.size()); }
  const StageModel& stage(int t) const { return stages.at(static_cast<std::size_t>(t - 1)); }
  double floor(int t) const { return floors.at(static_cast<std::size_t>(t - 2)); }

  void validate() const {
    if (stages.empty()) throw ModelError("deterministic model: no stages");
    if (static_cast<int>(floors.size()) != horizon() - 1) {
      throw ModelError("deterministic model: need one floor per stage 2..T");
    }
    for (int t = 1; t <= horizon(); ++t) {
      const std::string where = "stage " + std::to_string(t);
      stage(t).validate(where);
      const Index expect = t == 1 ? x0.size() : stage(t - 1).var_dim();
      if (stage(t).state_dim() != expect) {
        throw ModelError(where + ": state dimension does not match the previous decision");
      }
    }
  }
};

struct Realization {
  StageModel data;
  double prob = 1.0;
};

struct StochasticStageModel {
  std::vector<Realization> realizations;

  Index num_realizations() const { return static_cast<Index>(realizations.size()); }
  Index var_dim() const { return realizations.front().data.var_dim(); }
  Index state_dim() const { return realizations.front().data.state_dim(); }
  Index num_eq() const { return realizations.front().data.num_eq(); }

  void validate(const std::string& where) const {
    if (realizations.empty()) throw ModelError(where + ": no realizations");
    double total = 0.0;
    for (const auto& r : realizations) {
      r.data.validate(where);
      if (!(r.prob > 0.0)) throw ModelError(where + ": probabilities must be positive");
      if (r.data.var_dim() != var_dim() || r.data.state_dim() != state_dim() ||
          r.data.num_eq() != num_eq()) {
        throw ModelError(where + ": realizations must share dimensions");
      }
      total += r.prob;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ModelError(where + ": probabilities must sum to 1");
  }
};

struct StochasticModel {
  StageModel stage1;
  std::vector<StochasticStageModel> stages;  // t = 2..T
  Eigen::VectorXd x0;
  std::vector<double> floors;                // floors[i] bounds the cost-to-go of stage i + 2

  int horizon() const { return 1 + static_cast<int>(stages.size()); }
  const StochasticStageModel& stage(int t) const {
    return stages.at(static_cast<std::size_t>(t - 2));
  }
  double floor(int t) const { return floors.at(static_cast<std::size_t>(t - 2)); }
  Index num_realizations(int t) const { return t == 1 ? 1 : stage(t).num_realizations(); }
  const StageModel& realization(int t, Index j) const {
    return t == 1 ? stage1 : stage(t).realizations.at(static_cast<std::size_t>(j)).data;
  }
  double probability(int t, Index j) const {
    return t == 1 ? 1.0 : stage(t).realizations.at(static_cast<std::size_t>(j)).prob;
  }
  Index var_dim(int t) const { return t == 1 ? stage1.var_dim() : stage(t).var_dim(); }

  void validate() const {
    stage1.validate("stage 1");
    if (stage1.state_dim() != x0.size()) {
      throw ModelError("stage 1: state dimension does not match x0");
    }
    if (static_cast<int>(floors.size()) != horizon() - 1) {
      throw ModelError("stochastic model: need one floor per stage 2..T");
    }
    for (int t = 2; t <= horizon(); ++t) {
      const std::string where = "stage " + std::to_string(t);
      stage(t).validate(where);
      if (stage(t).state_dim() != var_dim(t - 1)) {
        throw ModelError(where + ": state dimension does not match the previous decision");
      }
    }
  }

  /// Number of scenarios (leaves) below stage t, inclusive.
  double leaves_from(int t) const {
    double n = 1.0;
    for (int s = std::max(t, 2); s <= horizon(); ++s) n *= static_cast<double>(num_realizations(s));
    return n;
  }
};

/// The stochastic view of a deterministic model (one realization per stage).
inline StochasticModel to_stochastic(const DeterministicModel& det) {
  det.validate();
  StochasticModel out;
  out.stage1 = det.stage(1);
  out.x0 = det.x0;
  out.floors = det.floors;
  for (int t = 2; t <= det.horizon(); ++t) {
    out.stages.push_back(StochasticStageModel{{Realization{det.stage(t), 1.0}}});
  }
  return out;
}

}  // namespace isddp
