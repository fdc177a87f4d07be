#include "isddp/json_io.hpp"
#include "isddp/oracle.hpp"
#include "isddp/portfolio.hpp"
#include "isddp/sddp_engine.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace isddp;

namespace {

// Every gross risky return equals g; M = 1 makes the tree a single path.
PortfolioSpec flat_spec(int T, int n, double g, double rf, double cost, Eigen::VectorXd x0) {
  PortfolioSpec s;
  s.T = T;
  s.n = n;
  s.M = 1;
  s.risk_free_return = rf;
  s.return_model = ReturnModel::FromFile;
  s.returns_table.assign(static_cast<std::size_t>(T), Eigen::VectorXd::Constant(n, g));
  s.fixed_transaction_cost = cost;
  s.initial_holdings = std::move(x0);
  return s;
}

PortfolioSpec small_spec(std::uint64_t seed) {
  PortfolioSpec s;
  s.T = 3;
  s.n = 2;
  s.M = 3;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Portfolio, Shapes) {
  PortfolioSpec s;
  const StochasticModel m = generate_instance(s);
  EXPECT_EQ(m.horizon(), 6);
  EXPECT_EQ(m.x0.size(), 5);
  EXPECT_EQ(m.stage1.var_dim(), 17);
  EXPECT_EQ(m.stage1.A.rows(), 9);
  EXPECT_EQ(m.stage1.state_dim(), 5);
  for (int t = 2; t <= 6; ++t) {
    ASSERT_EQ(m.num_realizations(t), 10);
    for (Index j = 0; j < 10; ++j) {
      EXPECT_EQ(m.realization(t, j).state_dim(), 17);
      EXPECT_DOUBLE_EQ(m.probability(t, j), 0.1);
    }
    EXPECT_LT(m.floor(t), 0.0);
  }
  // Only the last stage carries cost: minus final wealth.
  EXPECT_EQ(m.realization(6, 0).c.head(5), Eigen::VectorXd::Constant(5, -1.0));
  EXPECT_EQ(m.realization(5, 0).c.norm(), 0.0);
  EXPECT_EQ(m.stage1.c.norm(), 0.0);
}

TEST(Portfolio, NoReturnsNoCostsKeepsWealth) {
  const Eigen::VectorXd x0 = (Eigen::VectorXd(3) << 1.0, 2.0, 3.0).finished();
  for (double cost : {0.0, 0.1}) {
    const StochasticModel m = generate_instance(flat_spec(4, 2, 1.0, 0.0, cost, x0));
    EXPECT_NEAR(extensive_form(m), -6.0, 1e-9);
  }
}

TEST(Portfolio, FreeTradingMovesEverythingIntoTheBestAsset) {
  const double a = 2.0, c = 3.0;
  const Eigen::VectorXd x0 = (Eigen::VectorXd(3) << a / 2, a / 2, c).finished();
  for (int T : {2, 3, 4}) {
    const StochasticModel m = generate_instance(flat_spec(T, 2, 1.1, 0.004, 0.0, x0));
    EXPECT_NEAR(extensive_form(m), -(1.1 * a + 1.004 * c) * std::pow(1.1, T - 1), 1e-9) << T;
  }
}

TEST(Portfolio, GenerationIsDeterministic) {
  const json a = model_to_json(generate_instance(small_spec(5)));
  const json b = model_to_json(generate_instance(small_spec(5)));
  const json c = model_to_json(generate_instance(small_spec(6)));
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_NE(a.dump(), c.dump());
}

TEST(Portfolio, TransactionCostsFollowTheCosineRule) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PortfolioSpec s;
    s.seed = seed;
    s.n = 6;
    const TransactionCosts tc = sample_transaction_costs(s);
    EXPECT_EQ(tc.nu, tc.mu_cost);
    for (Index i = 0; i < tc.nu.size(); ++i) {
      EXPECT_GE(tc.nu(i), 0.02 - 1e-12);
      EXPECT_LE(tc.nu(i), 0.14 + 1e-12);
      bool on_grid = false;
      for (int U = 1; U <= s.T; ++U) {
        on_grid |= std::abs(tc.nu(i) - (0.08 + 0.06 * std::cos(2 * std::numbers::pi * U / s.T))) < 1e-12;
      }
      EXPECT_TRUE(on_grid);
    }
  }
}

TEST(Portfolio, SyntheticReturnsMatchTheirParameters) {
  PortfolioSpec s;
  s.T = 2;
  s.M = 100000;
  s.seed = 3;
  const AssetReturnParams p = synthetic_asset_params(s);
  for (Index i = 0; i < s.n; ++i) {
    EXPECT_GE(p.drift(i), 0.002);
    EXPECT_LE(p.drift(i), 0.012);
    EXPECT_GE(p.vol(i), 0.03);
    EXPECT_LE(p.vol(i), 0.08);
  }
  const PortfolioReturns r = sample_synthetic_returns(s);
  const auto& draws = r.stages.front();
  for (Index i = 0; i < s.n; ++i) {
    double mean = 0.0, ss = 0.0;
    for (const auto& d : draws) {
      EXPECT_GT(d(i), 0.0);
      mean += d(i);
    }
    mean /= draws.size();
    for (const auto& d : draws) ss += (d(i) - mean) * (d(i) - mean);
    const double se = std::sqrt(ss / (draws.size() - 1.0) / draws.size());
    EXPECT_NEAR(mean, 1.0 + p.drift(i), 3.0 * se);
  }
}

TEST(Portfolio, ReturnsCsvRoundTrip) {
  PortfolioSpec s = small_spec(9);
  const PortfolioReturns r = sample_synthetic_returns(s);
  std::vector<Eigen::VectorXd> table{r.stage1};
  for (const auto& stage : r.stages) table.insert(table.end(), stage.begin(), stage.end());
  std::stringstream io;
  write_returns_csv(io, table);
  io.seekg(0);
  const auto back = read_returns_csv(io);
  ASSERT_EQ(back.size(), table.size());
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_EQ(back[i], table[i]);

  PortfolioSpec f = s;
  f.return_model = ReturnModel::FromFile;
  f.returns_table = back;
  EXPECT_EQ(model_to_json(generate_instance(f)).dump(), model_to_json(generate_instance(s)).dump());

  std::stringstream bad("1.0,abc\n");
  EXPECT_THROW(read_returns_csv(bad), ModelError);
  f.returns_table.pop_back();
  EXPECT_THROW(generate_instance(f), ModelError);
}

TEST(Portfolio, SpecValidation) {
  PortfolioSpec s;
  s.T = 1;
  EXPECT_THROW(s.validate(), ModelError);
  s = {};
  s.u = 0.0;
  EXPECT_THROW(s.validate(), ModelError);
  s = {};
  s.fixed_transaction_cost = 1.0;
  EXPECT_THROW(s.validate(), ModelError);
  s = {};
  s.initial_holdings = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(s.validate(), ModelError);
}

TEST(Portfolio, SmallInstanceIsWellPosed) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const StochasticModel m = generate_instance(small_spec(seed));
    const double v = extensive_form(m);
    // Holding still is feasible, so v* is at most minus the expected no-trade wealth.
    const double w0 = m.x0.sum();
    EXPECT_LT(v, -w0 * 0.9);
    EXPECT_GE(v, m.floor(2) - 1e-9);
    for (int t = 2; t <= m.horizon(); ++t) {
      for (const auto& x : sample_reachable_states(m, t, 10, seed)) {
        const double q = exact_recourse(m, t, x);
        EXPECT_GE(q, m.floor(t) - 1e-9);
        EXPECT_LE(q, 0.0 + 1e-9);
      }
    }
    SddpOptions o;
    o.ub_mode = UbMode::Enumerated;
    o.gap_tol = 1e-9;
    o.max_iter = 200;
    const SddpRun run = run_isddp(m, ScheduleSpec::exact(), o);
    EXPECT_EQ(run.log.status, RunStatus::Converged);
    EXPECT_NEAR(run.log.last().lb, v, 1e-6 * std::abs(v));
  }
}

TEST(Portfolio, PositionLimitBinds) {
  // All cash at the start, asset 0 doubles at stage 2, trading is free and
  // u = 0.5 caps it at half the wealth: 5 * 2 + 5 = 15.
  PortfolioSpec s = flat_spec(2, 2, 1.0, 0.0, 0.0, (Eigen::VectorXd(3) << 0.0, 0.0, 10.0).finished());
  s.returns_table.assign(2, (Eigen::VectorXd(2) << 2.0, 1.0).finished());
  s.u = 0.5;
  EXPECT_NEAR(extensive_form(generate_instance(s)), -15.0, 1e-9);
}
