// Stage-subproblem LP kernel.
//
// A LinearProgram is
//
//     min  c'x + f
//     s.t. A x = r,   x >= 0,
//          f >= theta_i + beta_i' x   for every cut row i      (epigraph, f free)
//
// and its dual is
//
//     max  r'lambda + theta'mu
//     s.t. A'lambda - sum_i mu_i beta_i <= c,   sum_i mu_i = 1,   mu >= 0.
//
// Without an epigraph variable the cut rows and the convexity row disappear.
// All solves work on the dual written in standard form, whose row count is
// num_vars + 1 regardless of how many cuts the pool holds:
//   * primal simplex on it walks through dual-feasible points (lambda, mu)
//     with nondecreasing objective, which is the trail used to certify
//     eps-optimal dual solutions;
//   * dual simplex on it walks through primal-feasible vertices (x, f) with
//     nonincreasing objective, used for exact and delta-optimal primal solves.
#pragma once

#include "isddp/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace isddp {

struct LinearProgram {
  Eigen::VectorXd cost;            // c, length num_vars
  Eigen::MatrixXd eq_matrix;       // A, num_eq x num_vars
  Eigen::VectorXd eq_rhs;          // r = b - B x_prev
  Eigen::MatrixXd cut_slopes;      // num_vars x num_cuts, column i is beta_i
  Eigen::VectorXd cut_intercepts;  // theta_i
  bool has_epigraph = false;

  Index num_vars() const { return cost.size(); }
  Index num_eq() const { return eq_matrix.rows(); }
  Index num_cuts() const { return has_epigraph ? cut_intercepts.size() : 0; }

  void validate() const {
    if (eq_matrix.cols() != num_vars() || eq_rhs.size() != eq_matrix.rows()) {
      throw std::invalid_argument("LinearProgram: equality block has inconsistent dimensions");
    }
    if (has_epigraph) {
      if (cut_slopes.rows() != num_vars() || cut_slopes.cols() != cut_intercepts.size()) {
        throw std::invalid_argument("LinearProgram: cut rows have inconsistent dimensions");
      }
    }
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

struct PrimalDualSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;       // num_vars entries, then f when the LP has an epigraph
  double obj = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd lambda;  // equality multipliers
  Eigen::VectorXd mu;      // cut-row multipliers
  std::vector<Index> basis;  // basic primal columns (index num_vars stands for f)
};

enum class CertificateMode { Exact, EarlyStop, Retrospective };

struct DualCertificate {
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  double dual_obj = 0.0;
  double eps_certified = 0.0;
  CertificateMode mode = CertificateMode::Exact;
  double optimum = std::numeric_limits<double>::quiet_NaN();  // NaN under EarlyStop
};

/// Inexactness budget: absolute + relative * max(1, |optimum|).
struct Tolerance {
  double absolute = 0.0;
  double relative = 0.0;

  static Tolerance abs(double v) { return {v, 0.0}; }
  static Tolerance rel(double v) { return {0.0, v}; }
  double resolve(double optimum) const {
    return absolute + relative * std::max(1.0, std::abs(optimum));
  }
};

/// A primal-feasible vertex picked from the dual-simplex trail.
struct PrimalIterate {
  Eigen::VectorXd x;  // includes f last when the LP has an epigraph
  double obj = 0.0;
  double optimum = 0.0;
  double certified_gap = 0.0;  // obj - optimum
  std::size_t trail_position = 0;
  std::size_t trail_length = 0;
};

namespace detail {

// Standard form of the dual. Columns: [lambda+ | lambda- | mu | s], rows: x rows (+ f row).
struct DualForm {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  Eigen::VectorXd cost;
  Index n = 0, m = 0, k = 0;
  bool epigraph = false;

  Index lam_plus(Index i) const { return i; }
  Index lam_minus(Index i) const { return m + i; }
  Index mu(Index i) const { return 2 * m + i; }
  Index slack(Index j) const { return 2 * m + k + j; }
};

inline DualForm make_dual_form(const LinearProgram& lp) {
  DualForm d;
  d.n = lp.num_vars();
  d.m = lp.num_eq();
  d.k = lp.num_cuts();
  d.epigraph = lp.has_epigraph;
  const Index rows = d.n + (d.epigraph ? 1 : 0);
  const Index cols = 2 * d.m + d.k + d.n;
  d.matrix = Eigen::MatrixXd::Zero(rows, cols);
  d.cost = Eigen::VectorXd::Zero(cols);
  d.rhs = Eigen::VectorXd::Zero(rows);
  d.rhs.head(d.n) = lp.cost;
  if (d.epigraph) d.rhs(d.n) = 1.0;

  d.matrix.block(0, 0, d.n, d.m) = lp.eq_matrix.transpose();
  d.matrix.block(0, d.m, d.n, d.m) = -lp.eq_matrix.transpose();
  d.cost.segment(0, d.m) = -lp.eq_rhs;
  d.cost.segment(d.m, d.m) = lp.eq_rhs;
  if (d.k > 0) {
    d.matrix.block(0, 2 * d.m, d.n, d.k) = -lp.cut_slopes;
    d.matrix.block(d.n, 2 * d.m, 1, d.k).setOnes();
    d.cost.segment(2 * d.m, d.k) = -lp.cut_intercepts;
  }
  d.matrix.block(0, 2 * d.m + d.k, d.n, d.n).setIdentity();
  return d;
}

inline void unpack_dual(const DualForm& d, const Eigen::VectorXd& z, Eigen::VectorXd& lambda,
                        Eigen::VectorXd& mu) {
  lambda = z.segment(0, d.m) - z.segment(d.m, d.m);
  mu = z.segment(2 * d.m, d.k);
}

// Primal point (x, f) carried by the multipliers of a dual-form basis.
inline Eigen::VectorXd unpack_primal(const DualForm&, const Eigen::VectorXd& y) {
  return -y;
}

inline double lp_objective(const LinearProgram& lp, const Eigen::VectorXd& x) {
  double v = lp.cost.dot(x.head(lp.num_vars()));
  if (lp.has_epigraph) v += x(lp.num_vars());
  return v;
}

// Primal-feasible dual-form basis built from a vertex of {A x = r, x >= 0}.
struct FeasibleStart {
  bool feasible = false;
  std::vector<Index> dual_basis;
};

inline FeasibleStart primal_feasible_start(const LinearProgram& lp, const DualForm& d,
                                           const SimplexOptions& opts) {
  FeasibleStart out;
  const Index n = d.n, m = d.m;
  std::vector<bool> x_basic(static_cast<std::size_t>(n), false);
  std::vector<bool> row_redundant(static_cast<std::size_t>(m), false);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (m > 0) {
    simplex::RevisedSimplex phase1(lp.eq_matrix, lp.eq_rhs, Eigen::VectorXd::Zero(n), opts);
    if (phase1.solve_primal() == simplex::Outcome::Infeasible) return out;
    for (Index b : phase1.basis()) {
      if (b < n) x_basic[b] = true;
    }
    for (Index r : phase1.redundant_rows()) row_redundant[r] = true;
    x = phase1.primal_values();
  }
  out.feasible = true;
  for (Index i = 0; i < m; ++i) {
    if (!row_redundant[i]) out.dual_basis.push_back(d.lam_plus(i));
  }
  for (Index j = 0; j < n; ++j) {
    if (!x_basic[j]) out.dual_basis.push_back(d.slack(j));
  }
  if (d.epigraph && d.k > 0) {
    Index best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < d.k; ++i) {
      const double v = lp.cut_intercepts(i) + lp.cut_slopes.col(i).dot(x);
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    out.dual_basis.push_back(d.mu(best));
  }
  return out;
}

struct TrailEntry {
  double value;
  std::vector<Index> basis;
};

// Runs dual simplex on the dual form from a primal-feasible start. Trail values
// are primal objectives c'x + f (nonincreasing).
struct PrimalWalk {
  LpStatus status = LpStatus::Infeasible;
  std::vector<TrailEntry> trail;
};

inline PrimalWalk walk_primal_vertices(const LinearProgram& lp, const DualForm& d,
                                       simplex::RevisedSimplex& kernel, const SimplexOptions& opts,
                                       bool keep_trail) {
  PrimalWalk walk;
  if (d.epigraph && d.k == 0) {
    // f is unbounded below unless {A x = r, x >= 0} is empty.
    walk.status = primal_feasible_start(lp, d, opts).feasible ? LpStatus::Unbounded
                                                              : LpStatus::Infeasible;
    return walk;
  }
  FeasibleStart start = primal_feasible_start(lp, d, opts);
  if (!start.feasible) return walk;
  simplex::IterateObserver observe;
  if (keep_trail) {
    observe = [&walk](double value, std::span<const Index> basis) {
      walk.trail.push_back({-value, std::vector<Index>(basis.begin(), basis.end())});
      return false;
    };
  }
  const auto outcome = kernel.solve_dual(std::move(start.dual_basis), observe);
  walk.status = outcome == simplex::Outcome::Optimal ? LpStatus::Optimal : LpStatus::Unbounded;
  return walk;
}

inline std::vector<Index> primal_basis_from_dual(const DualForm& d,
                                                 const std::vector<Index>& dual_basis) {
  std::vector<bool> slack_basic(static_cast<std::size_t>(d.n), false);
  for (Index b : dual_basis) {
    if (b >= d.slack(0) && b < d.slack(0) + d.n) slack_basic[b - d.slack(0)] = true;
  }
  std::vector<Index> out;
  for (Index j = 0; j < d.n; ++j) {
    if (!slack_basic[j]) out.push_back(j);
  }
  if (d.epigraph) out.push_back(d.n);
  return out;
}

}  // namespace detail

/// Max violation of dual feasibility for (lambda, mu); zero when feasible.
inline double dual_feasibility_residual(const LinearProgram& lp, const Eigen::VectorXd& lambda,
                                        const Eigen::VectorXd& mu) {
  if (lambda.size() != lp.num_eq() || mu.size() != lp.num_cuts()) {
    throw std::invalid_argument("dual_feasibility_residual: dimension mismatch");
  }
  Eigen::VectorXd lhs = lp.eq_matrix.transpose() * lambda;
  if (lp.num_cuts() > 0) lhs -= lp.cut_slopes * mu;
  double res = std::max(0.0, (lhs - lp.cost).maxCoeff());
  if (lp.num_vars() == 0) res = 0.0;
  if (lp.has_epigraph) {
    if (mu.size() > 0) res = std::max(res, (-mu).maxCoeff());
    res = std::max(res, std::abs(mu.sum() - 1.0));
  }
  return res;
}

/// Exact solve: a basic optimal primal point with exact multipliers, or a status.
inline PrimalDualSolution solve_exact(const LinearProgram& lp, const SimplexOptions& opts = {}) {
  lp.validate();
  const detail::DualForm d = detail::make_dual_form(lp);
  simplex::RevisedSimplex kernel(d.matrix, d.rhs, d.cost, opts);
  const detail::PrimalWalk walk = detail::walk_primal_vertices(lp, d, kernel, opts, false);
  PrimalDualSolution sol;
  sol.status = walk.status;
  if (walk.status != LpStatus::Optimal) return sol;
  sol.x = detail::unpack_primal(d, kernel.multipliers());
  sol.obj = detail::lp_objective(lp, sol.x);
  detail::unpack_dual(d, kernel.primal_values(), sol.lambda, sol.mu);
  sol.basis = detail::primal_basis_from_dual(d, kernel.basis());
  return sol;
}

/// Earliest vertex on the dual-simplex trail whose objective is within `tol` of the optimum.
inline PrimalIterate solve_primal_inexact(const LinearProgram& lp, Tolerance tol,
                                          const SimplexOptions& opts = {}) {
  lp.validate();
  const detail::DualForm d = detail::make_dual_form(lp);
  simplex::RevisedSimplex kernel(d.matrix, d.rhs, d.cost, opts);
  detail::PrimalWalk walk = detail::walk_primal_vertices(lp, d, kernel, opts, true);
  if (walk.status != LpStatus::Optimal) {
    throw SolverFault(std::string("primal solve: subproblem is ") + to_string(walk.status));
  }
  const double optimum = walk.trail.back().value;
  const double budget = tol.resolve(optimum);
  std::size_t pick = walk.trail.size() - 1;
  for (std::size_t i = 0; i < walk.trail.size(); ++i) {
    if (walk.trail[i].value <= optimum + budget) {
      pick = i;
      break;
    }
  }
  if (pick + 1 != walk.trail.size()) kernel.set_basis(walk.trail[pick].basis);
  PrimalIterate it;
  it.x = detail::unpack_primal(d, kernel.multipliers());
  it.obj = detail::lp_objective(lp, it.x);
  it.optimum = optimum;
  it.certified_gap = std::max(0.0, it.obj - optimum);
  it.trail_position = pick;
  it.trail_length = walk.trail.size();
  return it;
}

/// eps-optimal dual-feasible point. With a primal upper bound hint the dual
/// walk stops as soon as hint - dual_obj <= budget (EarlyStop); otherwise the
/// walk runs to optimality and the earliest qualifying entry is returned
/// (Retrospective). A hint must be the objective of a primal-feasible point.
inline DualCertificate solve_dual_inexact(const LinearProgram& lp, Tolerance tol,
                                          std::optional<double> primal_upper_hint = {},
                                          const SimplexOptions& opts = {}) {
  lp.validate();
  const detail::DualForm d = detail::make_dual_form(lp);
  simplex::RevisedSimplex kernel(d.matrix, d.rhs, d.cost, opts);
  std::vector<detail::TrailEntry> trail;
  const bool early = primal_upper_hint.has_value();
  const double early_budget = early ? tol.resolve(*primal_upper_hint) : 0.0;
  const auto outcome = kernel.solve_primal([&](double value, std::span<const Index> basis) {
    const double dual_obj = -value;
    if (early) return *primal_upper_hint - dual_obj <= early_budget;
    trail.push_back({dual_obj, std::vector<Index>(basis.begin(), basis.end())});
    return false;
  });
  if (outcome == simplex::Outcome::Infeasible) {
    throw SolverFault("dual solve: dual infeasible (subproblem unbounded or infeasible)");
  }
  if (outcome == simplex::Outcome::Unbounded) {
    throw SolverFault("dual solve: dual unbounded (subproblem infeasible)");
  }

  DualCertificate cert;
  if (early) {
    cert.mode = outcome == simplex::Outcome::Stopped ? CertificateMode::EarlyStop
                                                     : CertificateMode::Exact;
  } else {
    const double optimum = trail.back().value;
    cert.optimum = optimum;
    const double budget = tol.resolve(optimum);
    std::size_t pick = trail.size() - 1;
    for (std::size_t i = 0; i < trail.size(); ++i) {
      if (trail[i].value >= optimum - budget) {
        pick = i;
        break;
      }
    }
    if (pick + 1 != trail.size()) kernel.set_basis(trail[pick].basis);
    cert.mode = budget > 0.0 ? CertificateMode::Retrospective : CertificateMode::Exact;
  }
  detail::unpack_dual(d, kernel.primal_values(), cert.lambda, cert.mu);
  cert.dual_obj = lp.eq_rhs.dot(cert.lambda);
  if (lp.num_cuts() > 0) cert.dual_obj += lp.cut_intercepts.dot(cert.mu);
  if (early) {
    cert.eps_certified = outcome == simplex::Outcome::Stopped
                             ? std::max(0.0, *primal_upper_hint - cert.dual_obj)
                             : 0.0;
    if (outcome != simplex::Outcome::Stopped) cert.optimum = cert.dual_obj;
  } else {
    cert.eps_certified = std::max(0.0, cert.optimum - cert.dual_obj);
  }
  return cert;
}

inline DualCertificate solve_dual_inexact(const LinearProgram& lp, double eps,
                                          std::optional<double> primal_upper_hint = {},
                                          const SimplexOptions& opts = {}) {
  if (eps < 0.0) throw std::invalid_argument("solve_dual_inexact: eps must be >= 0");
  return solve_dual_inexact(lp, Tolerance::abs(eps), primal_upper_hint, opts);
}

}  // namespace isddp
