// Deterministic dual dynamic programming with inexact cuts.
//
// Iteration k: forward pass with delta_t^k-optimal stage solves against the
// pools of iteration k-1, then a backward pass T..2 that appends one cut per
// stage built from eps_t^k-optimal dual solutions, then an exact stage-1 solve
// against the updated pools. That last solve yields the lower bound of
// iteration k and doubles as the stage-1 forward decision of iteration k+1.
#pragma once

#include "isddp/cuts.hpp"
#include "isddp/model.hpp"
#include "isddp/run_log.hpp"
#include "isddp/schedules.hpp"
#include "isddp/stage_problem.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isddp {

struct Trajectory {
  std::vector<Eigen::VectorXd> x;  // x_1 .. x_T
  std::vector<double> values;      // forward objective (c'x + f) per stage
  double cost = 0.0;               // sum_t c_t'x_t
};

/// One pool per stage 2..T; pools[t-2] approximates the cost-to-go of stage t.
inline std::vector<CutPool> initial_pools(const DeterministicModel& model) {
  std::vector<CutPool> pools;
  for (int t = 2; t <= model.horizon(); ++t) {
    pools.emplace_back(model.stage(t).state_dim(), model.floor(t));
  }
  return pools;
}

namespace detail {
inline const CutPool* next_pool(const std::vector<CutPool>& pools, int t, int T) {
  return t < T ? &pools[static_cast<std::size_t>(t - 1)] : nullptr;
}
}  // namespace detail

struct ForwardResult {
  Trajectory trajectory;
  double ub = 0.0;
};

/// `deltas[t-1]` is the budget of stage t. A precomputed stage-1 decision
/// (from the previous lower-bound solve) replaces the stage-1 solve.
inline ForwardResult forward_pass(const DeterministicModel& model,
                                  const std::vector<CutPool>& pools,
                                  std::span<const Tolerance> deltas,
                                  const std::optional<StageDecision>& first = std::nullopt,
                                  const SimplexOptions& opts = {}) {
  const int T = model.horizon();
  if (static_cast<int>(deltas.size()) != T || static_cast<int>(pools.size()) != T - 1) {
    throw std::invalid_argument("forward_pass: need T budgets and T-1 pools");
  }
  ForwardResult out;
  Eigen::VectorXd prev = model.x0;
  for (int t = 1; t <= T; ++t) {
    const std::string where = "stage " + std::to_string(t);
    const StageDecision d =
        (t == 1 && first) ? *first
                          : solve_stage(model.stage(t), prev, detail::next_pool(pools, t, T),
                                        deltas[static_cast<std::size_t>(t - 1)], where, opts);
    out.trajectory.x.push_back(d.x);
    out.trajectory.values.push_back(d.value);
    out.trajectory.cost += d.stage_cost;
    prev = d.x;
  }
  out.ub = out.trajectory.cost;
  return out;
}

struct BackwardResult {
  std::vector<Cut> new_cuts;      // in creation order (stage T first)
  double lb = 0.0;
  StageDecision first_stage;      // exact stage-1 solution against the updated pools
  std::vector<double> pool_value_at_trial;  // index t-2: updated pool t at x_{t-1}
};

/// `epsilons[t-1]` is the budget of stage t (stage 1 entry unused).
inline BackwardResult backward_pass(const DeterministicModel& model, std::vector<CutPool>& pools,
                                    const Trajectory& trajectory,
                                    std::span<const Tolerance> epsilons, int iteration,
                                    const SimplexOptions& opts = {}) {
  const int T = model.horizon();
  if (static_cast<int>(epsilons.size()) != T || static_cast<int>(trajectory.x.size()) != T) {
    throw std::invalid_argument("backward_pass: need T budgets and a full trajectory");
  }
  BackwardResult out;
  out.pool_value_at_trial.assign(static_cast<std::size_t>(std::max(T - 1, 0)), 0.0);
  for (int t = T; t >= 2; --t) {
    const StageModel& stage = model.stage(t);
    const Eigen::VectorXd& trial = trajectory.x[static_cast<std::size_t>(t - 2)];
    const CutPool* next = detail::next_pool(pools, t, T);
    const Tolerance tol = epsilons[static_cast<std::size_t>(t - 1)];
    const DualCertificate cert =
        solve_stage_dual(stage, trial, next, tol, "stage " + std::to_string(t), opts);
    const CutRealization real{&stage.b, &stage.B, 1.0};
    Cut cut = next ? build_middle_cut({&real, 1}, {&cert, 1}, next->row_intercepts())
                   : build_terminal_cut({&real, 1}, {&cert, 1});
    cut.stage = t;
    cut.iteration = iteration;
    cut.eps_used = tol.resolve(cert.optimum);
    CutPool& pool = pools[static_cast<std::size_t>(t - 2)];
    pool.add(cut);
    out.pool_value_at_trial[static_cast<std::size_t>(t - 2)] = pool.evaluate(trial);
    out.new_cuts.push_back(std::move(cut));
  }
  out.first_stage = solve_stage_exact(model.stage(1), model.x0, detail::next_pool(pools, 1, T),
                                      "stage 1", opts);
  out.lb = out.first_stage.value;
  return out;
}

struct DdpOptions {
  double tol = 1e-6;
  int max_iter = 100;
  bool keep_history = false;  // store trajectories and trial-point pool values
  SimplexOptions simplex;
  IterationCallback on_iteration;
};

struct DdpRun {
  RunLog log;
  std::vector<CutPool> pools;
  std::vector<Trajectory> trajectories;                // when keep_history
  std::vector<std::vector<double>> pool_value_at_trial;  // when keep_history
};

inline DdpRun run_iddp(const DeterministicModel& model, const ScheduleSpec& schedule,
                       const DdpOptions& options = {}, std::vector<CutPool> warm_pools = {}) {
  model.validate();
  schedule.validate();
  if (!(options.tol > 0.0)) throw std::invalid_argument("run_iddp: tol must be > 0");
  const int T = model.horizon();
  DdpRun run;
  run.pools = warm_pools.empty() ? initial_pools(model) : std::move(warm_pools);
  run.log.eps_bar = schedule.eps_bar;
  run.log.eps0 = schedule.eps0;
  const Stopwatch total;

  std::optional<StageDecision> first = solve_stage_exact(
      model.stage(1), model.x0, detail::next_pool(run.pools, 1, T), "stage 1", options.simplex);
  for (int k = 1; k <= options.max_iter; ++k) {
    const Stopwatch clock;
    std::vector<Tolerance> deltas;
    IterationRecord rec;
    rec.iteration = k;
    for (int t = 1; t <= T; ++t) deltas.push_back(forward_tolerance(schedule, t, k, T));
    ForwardResult fwd = forward_pass(model, run.pools, deltas, first, options.simplex);

    std::vector<Tolerance> epsilons(static_cast<std::size_t>(T));
    for (int t = 2; t <= T; ++t) {
      epsilons[static_cast<std::size_t>(t - 1)] = backward_tolerance(
          schedule, t, k, T, fwd.trajectory.values[static_cast<std::size_t>(t - 1)]);
    }
    rec.ub = fwd.ub;
    if (T == 1) {
      rec.lb = fwd.trajectory.values.front();
    } else {
      BackwardResult bwd =
          backward_pass(model, run.pools, fwd.trajectory, epsilons, k, options.simplex);
      rec.lb = bwd.lb;
      first = bwd.first_stage;
      if (options.keep_history) run.pool_value_at_trial.push_back(bwd.pool_value_at_trial);
    }
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      rec.delta_used.push_back(deltas[i].absolute + deltas[i].relative);
      rec.eps_used.push_back(t == 1 ? 0.0 : epsilons[i].absolute + epsilons[i].relative);
    }
    if (options.keep_history) run.trajectories.push_back(fwd.trajectory);
    rec.gap = rec.ub - rec.lb;
    rec.wall_ms = clock.elapsed_ms();
    run.log.iterations.push_back(rec);
    if (options.on_iteration) options.on_iteration(run.log, rec);
    if (rec.gap <= options.tol) {
      run.log.status = RunStatus::Converged;
      break;
    }
  }
  run.log.total_ms = total.elapsed_ms();
  return run;
}

}  // namespace isddp
