// Brute-force ground truth for small instances: the deterministic equivalent
// over the whole scenario tree, exact cost-to-go values and enumerated policy
// values. Every entry point refuses instances beyond its size guard.
#pragma once

#include "isddp/cuts.hpp"
#include "isddp/lp_core.hpp"
#include "isddp/model.hpp"
#include "isddp/sddp_engine.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace isddp {

struct OracleLimits {
  double max_leaves = 1e4;
  Index max_vars = 3000;  // variables of the assembled LP
};

/// A tree node: stage t, realization j, variable block [offset, offset + var_dim).
struct TreeNode {
  int stage = 0;
  Index realization = 0;
  int parent = -1;  // -1: the root state (x_prev supplied by the caller)
  Index offset = 0;
  double prob = 1.0;  // unconditional probability within the subtree
};

struct ExtensiveForm {
  LinearProgram lp;
  std::vector<TreeNode> nodes;
};

/// Deterministic equivalent of stages t..T given the state x_prev entering
/// stage t. Its optimum is the cost-to-go of stage t at x_prev (stage 1 with
/// x_prev = x0 gives the optimum of the whole problem).
inline ExtensiveForm subtree_form(const StochasticModel& model, int t, const Eigen::VectorXd& x_prev,
                                  const OracleLimits& limits = {}) {
  model.validate();
  const int T = model.horizon();
  if (t < 1 || t > T) throw std::invalid_argument("subtree_form: stage out of range");
  const Index state_dim = t == 1 ? model.x0.size() : model.stage(t).state_dim();
  if (x_prev.size() != state_dim) throw std::invalid_argument("subtree_form: state length");
  if (model.leaves_from(t) > limits.max_leaves) {
    throw OracleGuardError("scenario tree below stage " + std::to_string(t) + " has " +
                           std::to_string(model.leaves_from(t)) + " leaves (limit " +
                           std::to_string(limits.max_leaves) + ")");
  }
  double vars = 0.0;
  double width = 1.0;
  for (int s = t; s <= T; ++s) {
    width *= static_cast<double>(model.num_realizations(s));
    vars += width * static_cast<double>(model.var_dim(s));
  }
  if (vars > static_cast<double>(limits.max_vars)) {
    throw OracleGuardError("extensive form would have " + std::to_string(vars) +
                           " variables (limit " + std::to_string(limits.max_vars) + ")");
  }

  ExtensiveForm ef;
  Index num_vars = 0;
  Index num_rows = 0;
  std::vector<int> frontier{-1};
  for (int s = t; s <= T; ++s) {
    std::vector<int> next;
    for (int parent : frontier) {
      const double pp = parent < 0 ? 1.0 : ef.nodes[static_cast<std::size_t>(parent)].prob;
      for (Index j = 0; j < model.num_realizations(s); ++j) {
        TreeNode node{s, j, parent, num_vars, pp * model.probability(s, j)};
        num_vars += model.var_dim(s);
        num_rows += model.realization(s, j).num_eq();
        next.push_back(static_cast<int>(ef.nodes.size()));
        ef.nodes.push_back(node);
      }
    }
    frontier = std::move(next);
  }

  LinearProgram& lp = ef.lp;
  lp.cost = Eigen::VectorXd::Zero(num_vars);
  lp.eq_matrix = Eigen::MatrixXd::Zero(num_rows, num_vars);
  lp.eq_rhs = Eigen::VectorXd::Zero(num_rows);
  Index row = 0;
  for (const TreeNode& node : ef.nodes) {
    const StageModel& sm = model.realization(node.stage, node.realization);
    const Index m = sm.num_eq();
    lp.cost.segment(node.offset, sm.var_dim()) = node.prob * sm.c;
    lp.eq_matrix.block(row, node.offset, m, sm.var_dim()) = sm.A;
    if (node.parent < 0) {
      lp.eq_rhs.segment(row, m) = sm.b - sm.B * x_prev;
    } else {
      const TreeNode& par = ef.nodes[static_cast<std::size_t>(node.parent)];
      lp.eq_matrix.block(row, par.offset, m, sm.state_dim()) = sm.B;
      lp.eq_rhs.segment(row, m) = sm.b;
    }
    row += m;
  }
  return ef;
}

inline ExtensiveForm build_extensive_form(const StochasticModel& model,
                                          const OracleLimits& limits = {}) {
  return subtree_form(model, 1, model.x0, limits);
}

namespace detail {
inline double solve_oracle_lp(const LinearProgram& lp, const std::string& what,
                              const SimplexOptions& opts) {
  const PrimalDualSolution sol = solve_exact(lp, opts);
  if (sol.status != LpStatus::Optimal) {
    throw SolverFault(what + ": deterministic equivalent is " + to_string(sol.status));
  }
  return sol.obj;
}
}  // namespace detail

/// Optimal value of the whole problem.
inline double extensive_form(const StochasticModel& model, const OracleLimits& limits = {},
                             const SimplexOptions& opts = {}) {
  return detail::solve_oracle_lp(build_extensive_form(model, limits).lp, "extensive form", opts);
}

inline double extensive_form(const DeterministicModel& model, const OracleLimits& limits = {},
                             const SimplexOptions& opts = {}) {
  return extensive_form(to_stochastic(model), limits, opts);
}

/// Expected cost-to-go of stage t at the state x entering it; zero past the horizon.
inline double exact_recourse(const StochasticModel& model, int t, const Eigen::VectorXd& x,
                             const OracleLimits& limits = {}, const SimplexOptions& opts = {}) {
  if (t == model.horizon() + 1) return 0.0;
  return detail::solve_oracle_lp(subtree_form(model, t, x, limits).lp,
                                 "recourse of stage " + std::to_string(t), opts);
}

inline double exact_recourse(const DeterministicModel& model, int t, const Eigen::VectorXd& x,
                             const OracleLimits& limits = {}, const SimplexOptions& opts = {}) {
  return exact_recourse(to_stochastic(model), t, x, limits, opts);
}

namespace detail {

/// A vertex of {A x = b - B x_prev, x >= 0} minimizing a random cost.
inline Eigen::VectorXd random_vertex(const StageModel& stage, const Eigen::VectorXd& x_prev,
                                     std::mt19937_64& rng, const SimplexOptions& opts) {
  std::uniform_real_distribution<double> signed_cost(-1.0, 1.0);
  std::uniform_real_distribution<double> positive_cost(0.0, 1.0);
  LinearProgram lp;
  lp.eq_matrix = stage.A;
  lp.eq_rhs = stage.b - stage.B * x_prev;
  lp.cost = Eigen::VectorXd::NullaryExpr(stage.var_dim(), [&] { return signed_cost(rng); });
  PrimalDualSolution sol = solve_exact(lp, opts);
  if (sol.status == LpStatus::Unbounded) {
    lp.cost = Eigen::VectorXd::NullaryExpr(stage.var_dim(), [&] { return positive_cost(rng); });
    sol = solve_exact(lp, opts);
  }
  if (sol.status != LpStatus::Optimal) {
    throw SolverFault("reachable-state sampling: stage feasible set is empty");
  }
  return sol.x.head(stage.var_dim());
}

}  // namespace detail

/// States entering stage t (decisions of stage t-1) reachable from x0. Each is
/// a random convex combination of two random-vertex trajectories that share a
/// sampled realization path, hence feasible along that path.
inline std::vector<Eigen::VectorXd> sample_reachable_states(const StochasticModel& model, int t,
                                                            int count, std::uint64_t seed,
                                                            const SimplexOptions& opts = {}) {
  if (t < 2 || t > model.horizon()) {
    throw std::invalid_argument("sample_reachable_states: need 2 <= t <= T");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::vector<Index> path;
    for (int s = 2; s < t; ++s) path.push_back(detail::categorical(model.stage(s), unit(rng)));
    Eigen::VectorXd a = model.x0;
    Eigen::VectorXd b = model.x0;
    const double w = unit(rng);
    for (int s = 1; s < t; ++s) {
      const StageModel& sm =
          model.realization(s, s == 1 ? 0 : path[static_cast<std::size_t>(s - 2)]);
      // Both branches continue from the same mixed predecessor, which is feasible.
      const Eigen::VectorXd prev = w * a + (1.0 - w) * b;
      a = detail::random_vertex(sm, prev, rng, opts);
      b = detail::random_vertex(sm, prev, rng, opts);
    }
    out.push_back(w * a + (1.0 - w) * b);
  }
  return out;
}

inline std::vector<Eigen::VectorXd> sample_reachable_states(const DeterministicModel& model, int t,
                                                            int count, std::uint64_t seed,
                                                            const SimplexOptions& opts = {}) {
  return sample_reachable_states(to_stochastic(model), t, count, seed, opts);
}

}  // namespace isddp
