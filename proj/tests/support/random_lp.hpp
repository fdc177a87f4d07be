// Seeded random LPs that are feasible and bounded by construction: a planted
// nonnegative point fixes the right-hand side and a budget row caps the sum.
#pragma once

#include "isddp/lp_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace testing_support {

/// At most 8 variables (slack included) and 6 equality rows (budget included).
inline isddp::LinearProgram random_lp(std::mt19937_64& rng, bool epigraph) {
  using Eigen::Index;
  std::uniform_int_distribution<int> n_dist(1, 7);
  const Index ns = n_dist(rng);
  std::uniform_int_distribution<int> m_dist(0, static_cast<int>(std::min<Index>(5, ns)));
  const Index m = m_dist(rng);
  std::uniform_int_distribution<int> coef(-3, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  Eigen::VectorXd planted(ns);
  for (Index j = 0; j < ns; ++j) planted(j) = unit(rng) < 0.3 ? 0.0 : 2.0 * unit(rng);

  isddp::LinearProgram lp;
  const Index n = ns + 1;
  lp.eq_matrix = Eigen::MatrixXd::Zero(m + 1, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < ns; ++j) lp.eq_matrix(i, j) = coef(rng);
  }
  lp.eq_matrix.row(m).head(ns).setOnes();
  lp.eq_matrix(m, ns) = 1.0;
  lp.eq_rhs = Eigen::VectorXd(m + 1);
  lp.eq_rhs.head(m) = lp.eq_matrix.topLeftCorner(m, ns) * planted;
  lp.eq_rhs(m) = planted.sum() + 0.5 + 2.5 * unit(rng);
  lp.cost = Eigen::VectorXd(n);
  for (Index j = 0; j < n; ++j) lp.cost(j) = std::round(10.0 * sym(rng)) / 10.0;
  lp.cost(ns) = 0.0;
  if (epigraph) {
    std::uniform_int_distribution<int> k_dist(1, 3);
    const Index k = k_dist(rng);
    lp.has_epigraph = true;
    lp.cut_slopes = Eigen::MatrixXd(n, k);
    lp.cut_intercepts = Eigen::VectorXd(k);
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < n; ++j) lp.cut_slopes(j, i) = sym(rng);
      lp.cut_slopes(ns, i) = 0.0;
      lp.cut_intercepts(i) = sym(rng);
    }
  }
  return lp;
}

}  // namespace testing_support
