#include "isddp/cuts.hpp"
#include "isddp/ddp_engine.hpp"
#include "isddp/oracle.hpp"
#include "support/toys.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace isddp;

namespace {

DualCertificate dual(Eigen::VectorXd lambda, Eigen::VectorXd mu = {}) {
  DualCertificate d;
  d.lambda = std::move(lambda);
  d.mu = std::move(mu);
  return d;
}

}  // namespace

TEST(TerminalCut, IdentityStateMatrix) {
  const Eigen::VectorXd b = Eigen::Vector2d(1.0, 2.0);
  const Eigen::MatrixXd B = Eigen::Matrix2d::Identity();
  const CutRealization r{&b, &B, 1.0};
  const DualCertificate d = dual(Eigen::Vector2d(1.0, 0.0));
  const Cut c = build_terminal_cut({&r, 1}, {&d, 1});
  EXPECT_DOUBLE_EQ(c.theta, 1.0);
  EXPECT_DOUBLE_EQ(c.beta(0), -1.0);
  EXPECT_DOUBLE_EQ(c.beta(1), 0.0);
}

TEST(TerminalCut, ProbabilityWeightedAverage) {
  const Eigen::VectorXd b1 = Eigen::VectorXd::Constant(1, 2.0), b2 = Eigen::VectorXd::Constant(1, 4.0);
  const Eigen::MatrixXd B1 = Eigen::MatrixXd::Constant(1, 1, 1.0), B2 = Eigen::MatrixXd::Constant(1, 1, -1.0);
  const std::vector<CutRealization> r{{&b1, &B1, 0.25}, {&b2, &B2, 0.75}};
  const std::vector<DualCertificate> d{dual(Eigen::VectorXd::Constant(1, 1.0)),
                                       dual(Eigen::VectorXd::Constant(1, 2.0))};
  const Cut c = build_terminal_cut(r, d);
  EXPECT_DOUBLE_EQ(c.theta, 0.25 * 2.0 + 0.75 * 8.0);
  EXPECT_DOUBLE_EQ(c.beta(0), -(0.25 * 1.0 + 0.75 * -2.0));
}

TEST(MiddleCut, AddsPoolIntercepts) {
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 3.0);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const CutRealization r{&b, &B, 1.0};
  const DualCertificate d = dual(Eigen::VectorXd::Constant(1, 1.0), Eigen::Vector2d(0.5, 0.5));
  const Eigen::VectorXd thetas = Eigen::Vector2d(-4.0, 2.0);
  const Cut c = build_middle_cut({&r, 1}, {&d, 1}, thetas);
  EXPECT_DOUBLE_EQ(c.theta, 3.0 + 0.5 * -4.0 + 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(c.beta(0), -2.0);
}

TEST(Cut, RejectsBadInput) {
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 3.0);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const CutRealization half{&b, &B, 0.5};
  const DualCertificate d = dual(Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_THROW(build_terminal_cut({&half, 1}, {&d, 1}), std::invalid_argument);
  const CutRealization full{&b, &B, 1.0};
  const DualCertificate wrong = dual(Eigen::Vector2d(1.0, 1.0));
  EXPECT_THROW(build_terminal_cut({&full, 1}, {&wrong, 1}), std::invalid_argument);
  EXPECT_THROW(build_middle_cut({&full, 1}, {&d, 1}, Eigen::Vector2d(0.0, 0.0)),
               std::invalid_argument);
}

TEST(CutPool, FloorAndMax) {
  CutPool pool(2, -5.0);
  EXPECT_DOUBLE_EQ(pool.evaluate(Eigen::Vector2d(1.0, 1.0)), -5.0);
  Cut c;
  c.theta = 1.0;
  c.beta = Eigen::Vector2d(1.0, -1.0);
  pool.add(c);
  EXPECT_DOUBLE_EQ(pool.evaluate(Eigen::Vector2d(3.0, 0.0)), 4.0);
  EXPECT_DOUBLE_EQ(pool.evaluate(Eigen::Vector2d(0.0, 10.0)), -5.0);
  EXPECT_EQ(pool.row_intercepts().size(), 2);
  EXPECT_DOUBLE_EQ(pool.row_intercepts()(0), -5.0);
  c.beta = Eigen::Vector3d::Zero();
  EXPECT_THROW(pool.add(c), std::invalid_argument);
}

TEST(CutPool, MonotoneAndConvex) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  CutPool pool(3, -10.0);
  std::vector<Eigen::VectorXd> probes;
  for (int i = 0; i < 50; ++i) probes.push_back(Eigen::Vector3d(u(rng), u(rng), u(rng)));
  std::vector<double> before(probes.size());
  for (int k = 0; k < 20; ++k) {
    for (std::size_t i = 0; i < probes.size(); ++i) before[i] = pool.evaluate(probes[i]);
    Cut c;
    c.theta = u(rng);
    c.beta = Eigen::Vector3d(u(rng), u(rng), u(rng));
    pool.add(c);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      EXPECT_GE(pool.evaluate(probes[i]), before[i]);
      const Eigen::VectorXd mid = 0.5 * (probes[i] + probes[(i + 1) % probes.size()]);
      EXPECT_LE(pool.evaluate(mid),
                0.5 * (pool.evaluate(probes[i]) + pool.evaluate(probes[(i + 1) % probes.size()])) +
                    1e-12);
    }
  }
}

// Terminal cuts of the T=2 toy at its first trial point, checked against the
// exact cost-to-go.
class ToyTerminalCut : public ::testing::Test {
 protected:
  void SetUp() override {
    model = testing_support::load_det_toy("det_t2");
    pools = initial_pools(model);
    trial = solve_stage_exact(model.stage(1), model.x0, &pools[0], "stage 1").x;
  }
  Cut cut_with(double eps) {
    const StageModel& s = model.stage(2);
    const DualCertificate d = solve_stage_dual(s, trial, nullptr, Tolerance::abs(eps), "stage 2");
    const CutRealization r{&s.b, &s.B, 1.0};
    return build_terminal_cut({&r, 1}, {&d, 1});
  }
  DeterministicModel model;
  std::vector<CutPool> pools;
  Eigen::VectorXd trial;
};

TEST_F(ToyTerminalCut, ExactCutIsTightAndValid) {
  const Cut c = cut_with(0.0);
  EXPECT_NEAR(c.value(trial), exact_recourse(model, 2, trial), 1e-9);
  for (const auto& x : sample_reachable_states(model, 2, 100, 11)) {
    EXPECT_LE(c.value(x), exact_recourse(model, 2, x) + 1e-7);
  }
}

TEST_F(ToyTerminalCut, InexactCutGapWithinBudget) {
  for (double eps : {0.05, 0.2, 1.0}) {
    const Cut c = cut_with(eps);
    const double gap = exact_recourse(model, 2, trial) - c.value(trial);
    EXPECT_GE(gap, -1e-9);
    EXPECT_LE(gap, eps + 1e-9);
    for (const auto& x : sample_reachable_states(model, 2, 100, 12)) {
      EXPECT_LE(c.value(x), exact_recourse(model, 2, x) + 1e-7);
    }
  }
}
