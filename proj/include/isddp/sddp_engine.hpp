// Stochastic dual dynamic programming with inexact cuts over a stagewise
// independent scenario tree.
//
// Iteration k samples N paths, runs the forward pass along each of them, then
// sweeps t = T..2: for every path the M_t realization duals at the path's
// trial point are solved against the (already updated) pool t+1 and
// aggregated into one cut. The N cuts of stage t are appended to pool t in
// path order once all of them are built, so the result does not depend on the
// number of worker threads.
#pragma once

#include "isddp/cuts.hpp"
#include "isddp/ddp_engine.hpp"
#include "isddp/model.hpp"
#include "isddp/parallel.hpp"
#include "isddp/run_log.hpp"
#include "isddp/schedules.hpp"
#include "isddp/stage_problem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace isddp {

/// Realization indices for stages 2..T (0-based: indices[t-2] in [0, M_t)).
struct SamplePath {
  std::vector<Index> indices;
  int iteration = 0;
  int path = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform in [0, 1) keyed on (seed, iteration, path, stage).
inline double keyed_uniform(std::uint64_t seed, std::uint64_t iteration, std::uint64_t path,
                            std::uint64_t stage) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ iteration);
  h = splitmix64(h ^ path);
  h = splitmix64(h ^ stage);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline Index categorical(const StochasticStageModel& stage, double u) {
  double acc = 0.0;
  const Index m = stage.num_realizations();
  for (Index j = 0; j + 1 < m; ++j) {
    acc += stage.realizations[static_cast<std::size_t>(j)].prob;
    if (u < acc) return j;
  }
  return m - 1;
}

}  // namespace detail

inline std::vector<CutPool> initial_pools(const StochasticModel& model) {
  std::vector<CutPool> pools;
  for (int t = 2; t <= model.horizon(); ++t) {
    pools.emplace_back(model.stage(t).state_dim(), model.floor(t));
  }
  return pools;
}

inline std::vector<SamplePath> sample_paths(const StochasticModel& model, int n, int iteration,
                                            std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_paths: need at least one path");
  std::vector<SamplePath> paths(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    SamplePath& sp = paths[static_cast<std::size_t>(p)];
    sp.iteration = iteration;
    sp.path = p;
    for (int t = 2; t <= model.horizon(); ++t) {
      const double u = detail::keyed_uniform(seed, static_cast<std::uint64_t>(iteration),
                                             static_cast<std::uint64_t>(p),
                                             static_cast<std::uint64_t>(t));
      sp.indices.push_back(detail::categorical(model.stage(t), u));
    }
  }
  return paths;
}

struct SddpForwardResult {
  std::vector<Trajectory> trajectories;  // one per path
  std::vector<double> cost_samples;
};

/// `deltas[t-1]` is the budget of stage t. A precomputed stage-1 decision is
/// shared by all paths; without one, stage 1 is solved once with deltas[0].
inline SddpForwardResult forward_pass_sddp(const StochasticModel& model,
                                           const std::vector<CutPool>& pools,
                                           std::span<const SamplePath> paths,
                                           std::span<const Tolerance> deltas,
                                           const std::optional<StageDecision>& first = std::nullopt,
                                           const SimplexOptions& opts = {}, unsigned threads = 0) {
  const int T = model.horizon();
  if (static_cast<int>(deltas.size()) != T || static_cast<int>(pools.size()) != T - 1) {
    throw std::invalid_argument("forward_pass_sddp: need T budgets and T-1 pools");
  }
  const StageDecision d1 =
      first ? *first
            : solve_stage(model.stage1, model.x0, detail::next_pool(pools, 1, T), deltas[0],
                          "stage 1", opts);
  SddpForwardResult out;
  out.trajectories.resize(paths.size());
  out.cost_samples.resize(paths.size());
  parallel_for(
      paths.size(),
      [&](std::size_t p) {
        Trajectory& tr = out.trajectories[p];
        tr.x.push_back(d1.x);
        tr.values.push_back(d1.value);
        tr.cost = d1.stage_cost;
        for (int t = 2; t <= T; ++t) {
          const Index j = paths[p].indices.at(static_cast<std::size_t>(t - 2));
          const std::string where =
              "path " + std::to_string(paths[p].path) + ", stage " + std::to_string(t);
          const StageDecision d =
              solve_stage(model.realization(t, j), tr.x.back(), detail::next_pool(pools, t, T),
                          deltas[static_cast<std::size_t>(t - 1)], where, opts);
          tr.x.push_back(d.x);
          tr.values.push_back(d.value);
          tr.cost += d.stage_cost;
        }
        out.cost_samples[p] = tr.cost;
      },
      threads);
  return out;
}

struct SddpBackwardResult {
  std::vector<Cut> new_cuts;  // stage T first, paths in order within a stage
  double lb = 0.0;
  StageDecision first_stage;
};

/// `epsilons[p][t-1]` is the budget of stage t on path p (stage-1 entries unused).
inline SddpBackwardResult backward_pass_sddp(const StochasticModel& model,
                                             std::vector<CutPool>& pools,
                                             std::span<const Trajectory> trajectories,
                                             const std::vector<std::vector<Tolerance>>& epsilons,
                                             int iteration, const SimplexOptions& opts = {},
                                             unsigned threads = 0) {
  const int T = model.horizon();
  const std::size_t n = trajectories.size();
  if (epsilons.size() != n) throw std::invalid_argument("backward_pass_sddp: one budget row per path");
  SddpBackwardResult out;
  for (int t = T; t >= 2; --t) {
    const StochasticStageModel& stage = model.stage(t);
    const auto m = static_cast<std::size_t>(stage.num_realizations());
    const CutPool* next = detail::next_pool(pools, t, T);
    std::vector<DualCertificate> certs(n * m);
    parallel_for(
        n * m,
        [&](std::size_t idx) {
          const std::size_t p = idx / m;
          const std::size_t j = idx % m;
          const Eigen::VectorXd& trial = trajectories[p].x.at(static_cast<std::size_t>(t - 2));
          const std::string where = "path " + std::to_string(p) + ", stage " + std::to_string(t) +
                                    ", realization " + std::to_string(j);
          certs[idx] = solve_stage_dual(stage.realizations[j].data, trial, next,
                                        epsilons[p].at(static_cast<std::size_t>(t - 1)), where,
                                        opts);
        },
        threads);
    std::vector<CutRealization> reals;
    for (const auto& r : stage.realizations) reals.push_back({&r.data.b, &r.data.B, r.prob});
    std::vector<Cut> stage_cuts;
    for (std::size_t p = 0; p < n; ++p) {
      const std::span<const DualCertificate> duals(certs.data() + p * m, m);
      Cut cut = next ? build_middle_cut(reals, duals, next->row_intercepts())
                     : build_terminal_cut(reals, duals);
      cut.stage = t;
      cut.iteration = iteration;
      double eps = 0.0;
      for (const auto& d : duals) {
        eps = std::max(eps, epsilons[p][static_cast<std::size_t>(t - 1)].resolve(d.optimum));
      }
      cut.eps_used = eps;
      stage_cuts.push_back(std::move(cut));
    }
    CutPool& pool = pools[static_cast<std::size_t>(t - 2)];
    for (auto& c : stage_cuts) {
      pool.add(c);
      out.new_cuts.push_back(std::move(c));
    }
  }
  out.first_stage =
      solve_stage_exact(model.stage1, model.x0, detail::next_pool(pools, 1, T), "stage 1", opts);
  out.lb = out.first_stage.value;
  return out;
}

struct UpperBound {
  double value = 0.0;
  bool single_sample = false;
};

/// mean + z * s / sqrt(N) with the sample standard deviation s.
inline UpperBound upper_bound_ci(std::span<const double> samples, double z = 1.96) {
  if (samples.empty()) throw std::invalid_argument("upper_bound_ci: no samples");
  if (samples.size() == 1) return {samples.front(), true};
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  return {mean + z * std::sqrt(ss / (n - 1.0)) / std::sqrt(n), false};
}

/// Probability-weighted cost of the greedy policy defined by `pools`, over all
/// scenarios (exact stage solves). Throws when the tree has more than
/// `max_leaves` scenarios.
inline double policy_value(const StochasticModel& model, const std::vector<CutPool>& pools,
                           const SimplexOptions& opts = {}, double max_leaves = 1e4);

enum class UbMode { Sampled, Enumerated };
enum class GapRule { Relative, Absolute };

struct SddpOptions {
  int n_paths = 1;
  double gap_tol = 0.05;
  int max_iter = 100;
  std::uint64_t seed = 0;
  UbMode ub_mode = UbMode::Sampled;
  GapRule gap_rule = GapRule::Relative;
  double z = 1.96;
  unsigned threads = 0;  // 0: thread_budget()
  SimplexOptions simplex;
  IterationCallback on_iteration;
};

struct SddpRun {
  RunLog log;
  std::vector<CutPool> pools;
};

inline double sddp_gap(double lb, double ub, GapRule rule) {
  if (rule == GapRule::Absolute) return ub - lb;
  return (ub - lb) / std::max(std::abs(ub), 1e-6);
}

inline SddpRun run_isddp(const StochasticModel& model, const ScheduleSpec& schedule,
                         const SddpOptions& options = {}, std::vector<CutPool> warm_pools = {}) {
  model.validate();
  schedule.validate();
  if (options.n_paths < 1) throw std::invalid_argument("run_isddp: need at least one path");
  if (!(options.gap_tol > 0.0) ||
      (options.gap_rule == GapRule::Relative && !(options.gap_tol < 1.0))) {
    throw std::invalid_argument("run_isddp: gap_tol must lie in (0, 1)");
  }
  const int T = model.horizon();
  SddpRun run;
  run.pools = warm_pools.empty() ? initial_pools(model) : std::move(warm_pools);
  run.log.eps_bar = schedule.eps_bar;
  run.log.eps0 = schedule.eps0;
  run.log.stochastic = true;
  const Stopwatch total;

  std::optional<StageDecision> first = solve_stage_exact(
      model.stage1, model.x0, detail::next_pool(run.pools, 1, T), "stage 1", options.simplex);
  for (int k = 1; k <= options.max_iter; ++k) {
    const Stopwatch clock;
    IterationRecord rec;
    rec.iteration = k;
    rec.n_paths = options.n_paths;
    std::vector<Tolerance> deltas;
    for (int t = 1; t <= T; ++t) deltas.push_back(forward_tolerance(schedule, t, k, T));
    const auto paths = sample_paths(model, options.n_paths, k, options.seed);
    SddpForwardResult fwd =
        forward_pass_sddp(model, run.pools, paths, deltas, first, options.simplex, options.threads);

    std::vector<std::vector<Tolerance>> epsilons(paths.size(),
                                                 std::vector<Tolerance>(static_cast<std::size_t>(T)));
    for (std::size_t p = 0; p < paths.size(); ++p) {
      for (int t = 2; t <= T; ++t) {
        epsilons[p][static_cast<std::size_t>(t - 1)] = backward_tolerance(
            schedule, t, k, T, fwd.trajectories[p].values[static_cast<std::size_t>(t - 1)]);
      }
    }
    if (options.ub_mode == UbMode::Sampled) {
      const UpperBound ub = upper_bound_ci(fwd.cost_samples, options.z);
      rec.ub = ub.value;
      rec.ub_single_sample = ub.single_sample;
    }
    if (T == 1) {
      rec.lb = first->value;
    } else {
      SddpBackwardResult bwd = backward_pass_sddp(model, run.pools, fwd.trajectories, epsilons, k,
                                                  options.simplex, options.threads);
      rec.lb = bwd.lb;
      first = bwd.first_stage;
    }
    if (options.ub_mode == UbMode::Enumerated) {
      rec.ub = policy_value(model, run.pools, options.simplex);
    }
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      rec.delta_used.push_back(deltas[i].absolute + deltas[i].relative);
      double e = 0.0;
      if (t > 1) {
        for (const auto& row : epsilons) e = std::max(e, row[i].absolute + row[i].relative);
      }
      rec.eps_used.push_back(e);
    }
    rec.gap = sddp_gap(rec.lb, rec.ub, options.gap_rule);
    rec.wall_ms = clock.elapsed_ms();
    run.log.iterations.push_back(rec);
    if (options.on_iteration) options.on_iteration(run.log, rec);
    const bool stop =
        options.gap_rule == GapRule::Absolute ? rec.gap <= options.gap_tol : rec.gap < options.gap_tol;
    if (stop) {
      run.log.status = RunStatus::Converged;
      break;
    }
  }
  run.log.total_ms = total.elapsed_ms();
  return run;
}

/// Out-of-loop simulation with exact stage solves; one cost per sampled path.
inline std::vector<double> evaluate_policy(const StochasticModel& model,
                                           const std::vector<CutPool>& pools, int n,
                                           std::uint64_t seed, const SimplexOptions& opts = {},
                                           unsigned threads = 0) {
  const int T = model.horizon();
  const auto paths = sample_paths(model, n, 0, seed);
  const std::vector<Tolerance> exact(static_cast<std::size_t>(T), Tolerance{});
  const StageDecision first =
      solve_stage_exact(model.stage1, model.x0, detail::next_pool(pools, 1, T), "stage 1", opts);
  return forward_pass_sddp(model, pools, paths, exact, first, opts, threads).cost_samples;
}

namespace detail {

inline double policy_value_from(const StochasticModel& model, const std::vector<CutPool>& pools,
                                int t, const Eigen::VectorXd& x_prev, const SimplexOptions& opts) {
  const int T = model.horizon();
  double total = 0.0;
  for (Index j = 0; j < model.num_realizations(t); ++j) {
    const StageDecision d = solve_stage_exact(model.realization(t, j), x_prev,
                                              next_pool(pools, t, T),
                                              "stage " + std::to_string(t), opts);
    double v = d.stage_cost;
    if (t < T) v += policy_value_from(model, pools, t + 1, d.x, opts);
    total += model.probability(t, j) * v;
  }
  return total;
}

}  // namespace detail

inline double policy_value(const StochasticModel& model, const std::vector<CutPool>& pools,
                           const SimplexOptions& opts, double max_leaves) {
  if (model.leaves_from(2) > max_leaves) {
    throw OracleGuardError("policy_value: scenario tree exceeds the enumeration guard");
  }
  return detail::policy_value_from(model, pools, 1, model.x0, opts);
}

}  // namespace isddp
