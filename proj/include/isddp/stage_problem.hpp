// Stage subproblems shared by the deterministic and stochastic engines.
#pragma once

#include "isddp/cuts.hpp"
#include "isddp/lp_core.hpp"
#include "isddp/model.hpp"

#include <Eigen/Dense>

#include <string>

namespace isddp {

/// min c'x + Q_{t+1}(x)  s.t.  A x = b - B x_prev, x >= 0; Q_{t+1} is the pool
/// (or zero when `next` is null, i.e. at the last stage).
inline LinearProgram stage_lp(const StageModel& stage, const Eigen::VectorXd& x_prev,
                              const CutPool* next) {
  LinearProgram lp;
  lp.cost = stage.c;
  lp.eq_matrix = stage.A;
  lp.eq_rhs = stage.b - stage.B * x_prev;
  if (next != nullptr) {
    lp.has_epigraph = true;
    lp.cut_slopes = next->row_slopes();
    lp.cut_intercepts = next->row_intercepts();
  }
  return lp;
}

struct StageDecision {
  Eigen::VectorXd x;        // decision without the epigraph variable
  double value = 0.0;       // c'x + f
  double stage_cost = 0.0;  // c'x
};

/// Forward-pass solve: delta-optimal vertex (tol = 0 gives the optimum).
inline StageDecision solve_stage(const StageModel& stage, const Eigen::VectorXd& x_prev,
                                 const CutPool* next, Tolerance tol, const std::string& where,
                                 const SimplexOptions& opts = {}) {
  const LinearProgram lp = stage_lp(stage, x_prev, next);
  PrimalIterate it;
  try {
    it = solve_primal_inexact(lp, tol, opts);
  } catch (const SolverFault& e) {
    throw SolverFault(where + ": " + e.what(), e.basis(), e.objective());
  }
  StageDecision d;
  d.x = it.x.head(stage.var_dim());
  d.value = it.obj;
  d.stage_cost = stage.c.dot(d.x);
  return d;
}

/// Exact stage solve via solve_exact (used for bounds that must not carry noise).
inline StageDecision solve_stage_exact(const StageModel& stage, const Eigen::VectorXd& x_prev,
                                       const CutPool* next, const std::string& where,
                                       const SimplexOptions& opts = {}) {
  const LinearProgram lp = stage_lp(stage, x_prev, next);
  const PrimalDualSolution sol = solve_exact(lp, opts);
  if (sol.status != LpStatus::Optimal) {
    throw SolverFault(where + ": subproblem is " + to_string(sol.status));
  }
  StageDecision d;
  d.x = sol.x.head(stage.var_dim());
  d.value = sol.obj;
  d.stage_cost = stage.c.dot(d.x);
  return d;
}

inline DualCertificate solve_stage_dual(const StageModel& stage, const Eigen::VectorXd& x_prev,
                                        const CutPool* next, Tolerance tol,
                                        const std::string& where,
                                        const SimplexOptions& opts = {}) {
  const LinearProgram lp = stage_lp(stage, x_prev, next);
  try {
    return solve_dual_inexact(lp, tol, std::nullopt, opts);
  } catch (const SolverFault& e) {
    throw SolverFault(where + ": " + e.what(), e.basis(), e.objective());
  }
}

}  // namespace isddp
