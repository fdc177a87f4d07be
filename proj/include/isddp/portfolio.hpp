// Multistage portfolio benchmark with proportional transaction costs.
//
// Stage variables: [x(0..n) | b(0..n-1) | s(0..n-1) | slack(0..n-1)], where
// x holds the n risky positions followed by cash, b and s are buys and sells.
//   risky i:  x_i = xi_i * prev_i + b_i - s_i
//   cash:     x_n = xi_n * prev_n - sum (1 + nu_i) b_i + sum (1 - mu_i) s_i
//   limit i:  x_i + slack_i = u * sum_j x_j
// The state entering stage 1 is x0; later stages take the whole previous
// stage vector as state (only its first n+1 entries carry weight). The last
// stage pays -sum_j x_j, i.e. the model minimizes the expected final loss.
#pragma once

#include "isddp/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isddp {

enum class ReturnModel { Synthetic, FromFile };

struct PortfolioSpec {
  int T = 6;
  int n = 4;
  int M = 10;
  double risk_free_return = 0.004;  // net return per stage
  double u = 1.0;                   // largest position as a fraction of wealth
  std::uint64_t seed = 1;
  ReturnModel return_model = ReturnModel::Synthetic;
  // FromFile: 1 + (T-1)*M rows of n gross risky returns. Row 0 is the stage-1
  // return, then M rows per stage t = 2..T.
  std::vector<Eigen::VectorXd> returns_table;
  std::optional<double> fixed_transaction_cost;  // overrides the sampled nu = mu
  std::optional<Eigen::VectorXd> initial_holdings;  // overrides the sampled x0 (n+1)

  void validate() const {
    if (T < 2 || n < 1 || M < 1) throw ModelError("portfolio: need T >= 2, n >= 1, M >= 1");
    if (!(u > 0.0 && u <= 1.0)) throw ModelError("portfolio: u must lie in (0, 1]");
    if (risk_free_return <= -1.0) throw ModelError("portfolio: risk-free gross return must be positive");
    if (fixed_transaction_cost && !(*fixed_transaction_cost >= 0.0 && *fixed_transaction_cost < 1.0)) {
      throw ModelError("portfolio: transaction cost must lie in [0, 1)");
    }
    if (initial_holdings &&
        (initial_holdings->size() != n + 1 || (initial_holdings->array() < 0.0).any())) {
      throw ModelError("portfolio: initial holdings need n+1 nonnegative entries");
    }
    if (return_model == ReturnModel::FromFile) {
      if (returns_table.size() != static_cast<std::size_t>(1 + (T - 1) * M)) {
        throw ModelError("portfolio: returns table needs 1 + (T-1)*M rows");
      }
      for (const auto& row : returns_table) {
        if (row.size() != n || (row.array() <= 0.0).any()) {
          throw ModelError("portfolio: returns rows need n positive gross returns");
        }
      }
    }
  }
};

struct TransactionCosts {
  Eigen::VectorXd nu;       // buy
  Eigen::VectorXd mu_cost;  // sell
};

/// Per-asset lognormal parameters of the synthetic return model.
struct AssetReturnParams {
  Eigen::VectorXd drift;  // expected net return per stage
  Eigen::VectorXd vol;    // volatility of the log return
};

/// Gross risky returns: stage1 for stage 1, stages[t-2][j] for realization j of stage t.
struct PortfolioReturns {
  Eigen::VectorXd stage1;
  std::vector<std::vector<Eigen::VectorXd>> stages;
};

namespace detail {

// Separate streams so that e.g. changing M does not reshuffle the costs.
inline std::mt19937_64 portfolio_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline Eigen::VectorXd draw_gross_returns(const AssetReturnParams& p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd r(p.drift.size());
  for (Index i = 0; i < r.size(); ++i) {
    const double s = p.vol(i);
    r(i) = std::exp(std::log1p(p.drift(i)) - 0.5 * s * s + s * normal(rng));
  }
  return r;
}

}  // namespace detail

/// Drift uniform in [0.2%, 1.2%], volatility uniform in [3%, 8%], per asset.
inline AssetReturnParams synthetic_asset_params(const PortfolioSpec& spec) {
  auto rng = detail::portfolio_stream(spec.seed, 1);
  std::uniform_real_distribution<double> drift(0.002, 0.012);
  std::uniform_real_distribution<double> vol(0.03, 0.08);
  AssetReturnParams p{Eigen::VectorXd(spec.n), Eigen::VectorXd(spec.n)};
  for (int i = 0; i < spec.n; ++i) {
    p.drift(i) = drift(rng);
    p.vol(i) = vol(rng);
  }
  return p;
}

inline PortfolioReturns sample_synthetic_returns(const PortfolioSpec& spec) {
  spec.validate();
  if (spec.return_model != ReturnModel::Synthetic) {
    throw std::invalid_argument("sample_synthetic_returns: spec uses returns from a file");
  }
  const AssetReturnParams params = synthetic_asset_params(spec);
  auto rng = detail::portfolio_stream(spec.seed, 2);
  PortfolioReturns out;
  out.stage1 = detail::draw_gross_returns(params, rng);
  for (int t = 2; t <= spec.T; ++t) {
    auto& stage = out.stages.emplace_back();
    for (int j = 0; j < spec.M; ++j) stage.push_back(detail::draw_gross_returns(params, rng));
  }
  return out;
}

inline PortfolioReturns returns_from_table(const PortfolioSpec& spec) {
  spec.validate();
  PortfolioReturns out;
  out.stage1 = spec.returns_table.front();
  std::size_t row = 1;
  for (int t = 2; t <= spec.T; ++t) {
    auto& stage = out.stages.emplace_back();
    for (int j = 0; j < spec.M; ++j) stage.push_back(spec.returns_table[row++]);
  }
  return out;
}

/// nu_i = mu_i = 0.08 + 0.06 cos(2 pi U_i / T), U_i uniform on {1..T}, fixed over time.
inline TransactionCosts sample_transaction_costs(const PortfolioSpec& spec) {
  TransactionCosts tc{Eigen::VectorXd(spec.n), Eigen::VectorXd(spec.n)};
  if (spec.fixed_transaction_cost) {
    tc.nu.setConstant(*spec.fixed_transaction_cost);
  } else {
    auto rng = detail::portfolio_stream(spec.seed, 3);
    std::uniform_int_distribution<int> U(1, spec.T);
    for (int i = 0; i < spec.n; ++i) {
      tc.nu(i) = 0.08 + 0.06 * std::cos(2.0 * std::numbers::pi / spec.T * U(rng));
    }
  }
  tc.mu_cost = tc.nu;
  return tc;
}

inline Eigen::VectorXd sample_initial_holdings(const PortfolioSpec& spec) {
  if (spec.initial_holdings) return *spec.initial_holdings;
  auto rng = detail::portfolio_stream(spec.seed, 4);
  std::uniform_real_distribution<double> unit(0.0, 10.0);
  Eigen::VectorXd x0(spec.n + 1);
  for (Index i = 0; i < x0.size(); ++i) x0(i) = unit(rng);
  return x0;
}

/// Stage LP for the given gross risky returns; `state_dim` is n+1 at stage 1
/// and 4n+1 afterwards.
inline StageModel portfolio_stage(const PortfolioSpec& spec, const TransactionCosts& tc,
                                  const Eigen::VectorXd& risky, Index state_dim, bool last) {
  const int n = spec.n;
  const Index vars = 4 * n + 1;
  const Index rows = 2 * n + 1;
  const auto xi = [](int i) { return static_cast<Index>(i); };
  const auto bi = [n](int i) { return static_cast<Index>(n + 1 + i); };
  const auto si = [n](int i) { return static_cast<Index>(2 * n + 1 + i); };
  const auto li = [n](int i) { return static_cast<Index>(3 * n + 1 + i); };
  StageModel s;
  s.A = Eigen::MatrixXd::Zero(rows, vars);
  s.B = Eigen::MatrixXd::Zero(rows, state_dim);
  s.b = Eigen::VectorXd::Zero(rows);
  s.c = Eigen::VectorXd::Zero(vars);
  for (int i = 0; i < n; ++i) {
    s.A(i, xi(i)) = 1.0;
    s.A(i, bi(i)) = -1.0;
    s.A(i, si(i)) = 1.0;
    s.B(i, i) = -risky(i);
  }
  s.A(n, xi(n)) = 1.0;
  for (int i = 0; i < n; ++i) {
    s.A(n, bi(i)) = 1.0 + tc.nu(i);
    s.A(n, si(i)) = -(1.0 - tc.mu_cost(i));
  }
  s.B(n, n) = -(1.0 + spec.risk_free_return);
  for (int i = 0; i < n; ++i) {
    const Index r = n + 1 + i;
    for (int j = 0; j <= n; ++j) s.A(r, xi(j)) = -spec.u;
    s.A(r, xi(i)) += 1.0;
    s.A(r, li(i)) = 1.0;
  }
  if (last) s.c.head(n + 1).setConstant(-1.0);
  return s;
}

inline StochasticModel generate_instance(const PortfolioSpec& spec) {
  spec.validate();
  const PortfolioReturns ret = spec.return_model == ReturnModel::Synthetic
                                   ? sample_synthetic_returns(spec)
                                   : returns_from_table(spec);
  const TransactionCosts tc = sample_transaction_costs(spec);
  StochasticModel model;
  model.x0 = sample_initial_holdings(spec);
  const Index vars = 4 * spec.n + 1;
  model.stage1 = portfolio_stage(spec, tc, ret.stage1, spec.n + 1, false);

  // Trades never create wealth, so final wealth is at most W0 * g^T with g the
  // largest gross return anywhere in the tree.
  double g = std::max(1.0 + spec.risk_free_return, ret.stage1.maxCoeff());
  for (const auto& stage : ret.stages) {
    for (const auto& r : stage) g = std::max(g, r.maxCoeff());
  }
  const double floor = -model.x0.sum() * std::pow(g, spec.T);

  for (int t = 2; t <= spec.T; ++t) {
    StochasticStageModel stage;
    for (const auto& r : ret.stages[static_cast<std::size_t>(t - 2)]) {
      stage.realizations.push_back(
          {portfolio_stage(spec, tc, r, vars, t == spec.T), 1.0 / spec.M});
    }
    model.stages.push_back(std::move(stage));
    model.floors.push_back(floor);
  }
  model.validate();
  return model;
}

/// Rows of comma-separated gross returns; blank lines and lines starting with '#' are skipped.
inline std::vector<Eigen::VectorXd> read_returns_csv(std::istream& in) {
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ModelError("returns csv: cannot parse '" + cell + "'");
      }
    }
    rows.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Index>(vals.size())));
  }
  return rows;
}

inline void write_returns_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& rows) {
  char buf[40];
  for (const auto& r : rows) {
    for (Index i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r(i));
      os << (i ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace isddp
