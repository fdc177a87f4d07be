#include "isddp/cli.hpp"
#include "support/toys.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace isddp;
namespace fs = std::filesystem;
using testing_support::toy_path;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "isddp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("isddp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenIsReproducible) {
  const std::vector<std::string> args{"gen", "--T", "3", "--n", "2", "--M", "3", "--seed", "4"};
  auto a = args, b = args, c = args;
  a.insert(a.end(), {"--out", path("a.json")});
  b.insert(b.end(), {"--out", path("b.json")});
  c[8] = "5";
  c.insert(c.end(), {"--out", path("c.json")});
  const Outcome ra = invoke(a);
  ASSERT_EQ(ra.code, 0) << ra.err;
  EXPECT_NE(ra.out.find("T=3 n=2 M=3"), std::string::npos);
  ASSERT_EQ(invoke(b).code, 0);
  ASSERT_EQ(invoke(c).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_NE(slurp(path("a.json")), slurp(path("c.json")));
  const LoadedModel m = model_from_json(read_json_file(path("a.json")));
  EXPECT_FALSE(m.deterministic);
  EXPECT_EQ(m.model.horizon(), 3);
  EXPECT_EQ(m.model.num_realizations(3), 3);
}

TEST_F(Cli, GenFromReturnsFile) {
  {
    std::ofstream f(path("r.csv"));
    f << "# stage 1\n1.01,1.02\n1.0,1.1\n0.9,1.05\n";
  }
  const Outcome r = invoke({"gen", "--T", "2", "--n", "2", "--M", "2", "--returns-csv", path("r.csv"),
                         "--transaction-cost", "0.01", "--x0", "1,1,1", "--out", path("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const StochasticModel m = model_from_json(read_json_file(path("m.json"))).model;
  EXPECT_DOUBLE_EQ(m.stage1.B(0, 0), -1.01);
  EXPECT_DOUBLE_EQ(m.realization(2, 1).B(1, 1), -1.05);
  EXPECT_EQ(m.x0, Eigen::VectorXd::Ones(3));
  // Wrong row count for T = 3.
  EXPECT_EQ(invoke({"gen", "--T", "3", "--n", "2", "--M", "2", "--returns-csv", path("r.csv"), "--out",
                 path("x.json")}).code,
            1);
}

TEST_F(Cli, SolveWritesLogAndSummary) {
  const Outcome r = invoke({"solve", "--instance", toy_path("det_t3"), "--algo", "ddp", "--no-timing",
                         "--out", path("log.csv"), "--cuts-out", path("cuts.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(path("log.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,lb,ub,gap");
  const json s = read_json_file(path("log.csv") + ".summary.json");
  EXPECT_EQ(s["status"], "converged");
  EXPECT_NEAR(s["lb"].get<double>(), 5.0, 1e-6);

  // Warm start from the saved pools converges at once.
  const Outcome w = invoke({"solve", "--instance", toy_path("det_t3"), "--algo", "ddp", "--no-timing",
                         "--cuts-in", path("cuts.json"), "--summary", path("w.json")});
  ASSERT_EQ(w.code, 0) << w.err;
  EXPECT_EQ(read_json_file(path("w.json"))["iterations"], 1);
  EXPECT_EQ(w.out.substr(0, w.out.find('\n')), "iter,lb,ub,gap");
}

TEST_F(Cli, StochasticEnginesAgreeOnDeterministicInput) {
  const std::string inst = toy_path("det_t5");
  ASSERT_EQ(invoke({"solve", "--instance", inst, "--algo", "ddp", "--summary", path("a.json"), "--out",
                 path("a.csv")}).code,
            0);
  ASSERT_EQ(invoke({"solve", "--instance", inst, "--algo", "sddp", "--gap-tol", "1e-9", "--summary",
                 path("b.json"), "--out", path("b.csv")}).code,
            0);
  const json a = read_json_file(path("a.json"));
  const json b = read_json_file(path("b.json"));
  EXPECT_NEAR(a["lb"].get<double>(), b["lb"].get<double>(), 1e-9);
  EXPECT_NEAR(a["ub"].get<double>(), b["ub"].get<double>(), 1e-9);
}

TEST_F(Cli, SolveIsDeterministicWithoutTiming) {
  const std::vector<std::string> base{"solve", "--instance", toy_path("stoch_t4_m3"), "--algo", "isddp",
                                      "--preset", "isddp-lp2", "--paths", "5", "--seed", "3",
                                      "--no-timing", "--gap-tol", "1e-3", "--max-iter", "20"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a.csv")});
  b.insert(b.end(), {"--out", path("b.csv")});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a.csv")).substr(0, 30), "iter,lb,ub,gap,n_paths,eps_bar");
}

TEST_F(Cli, ConfigFileWithOverrides) {
  RunConfig c;
  c.algorithm = Algorithm::Iddp;
  c.schedule = ScheduleSpec::relative(0.1, 1e-12);
  c.instance = toy_path("det_t2");
  c.max_iter = 50;
  write_json_file(path("cfg.json"), config_to_json(c));
  EXPECT_EQ(config_to_json(config_from_json(read_json_file(path("cfg.json")))).dump(),
            config_to_json(c).dump());
  const Outcome r = invoke({"solve", "--config", path("cfg.json"), "--max-iter", "1", "--summary",
                         path("s.json"), "--out", path("o.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = read_json_file(path("s.json"));
  EXPECT_EQ(s["algorithm"], "iddp");
  EXPECT_EQ(s["iterations"], 1);
}

TEST_F(Cli, CompareAgainstItself) {
  RunConfig c;
  c.algorithm = Algorithm::Isddp;
  c.schedule = preset("isddp-lp1");
  c.instance = toy_path("stoch_t3_m2");
  c.n_paths = 4;
  write_json_file(path("c.json"), config_to_json(c));
  const Outcome r = invoke({"compare", "--configs", path("c.json"), path("c.json"), "--report",
                         path("rep.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string rep = slurp(path("rep.csv"));
  EXPECT_NE(rep.find(",1.0000,"), std::string::npos) << rep;
  EXPECT_NE(r.out.find("1.00"), std::string::npos);
}

TEST_F(Cli, ComparePresets) {
  const Outcome r = invoke({"compare", "--instance", toy_path("stoch_t3_m2"), "--paths", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto header = r.out.find("variant,T,eps_bar");
  ASSERT_NE(header, std::string::npos);
  int rows = 0;
  std::istringstream table(r.out.substr(header));
  std::string line;
  std::getline(table, line);
  while (std::getline(table, line)) rows += !line.empty();
  EXPECT_EQ(rows, 4);
  for (const char* p : {"isddp-lp1", "isddp-lp2", "isddp-lp3", "isddp-lp4"}) {
    EXPECT_NE(r.out.find(p), std::string::npos);
  }
}

TEST_F(Cli, OracleValues) {
  const Outcome r = invoke({"oracle", "--instance", toy_path("det_t3")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 8), "v_star=5");
  const Outcome q = invoke({"oracle", "--instance", toy_path("stoch_t3_m2"), "--stage", "3", "--state",
                         "0,0,0,0,0"});
  ASSERT_EQ(q.code, 0) << q.err;
  EXPECT_NE(q.out.find("recourse_stage=3 value="), std::string::npos);
  EXPECT_EQ(invoke({"oracle", "--instance", toy_path("det_t3"), "--stage", "2"}).code, 1);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"bogus"}).code, 1);
  EXPECT_EQ(invoke({"solve", "--instance", path("missing.json")}).code, 1);
  EXPECT_EQ(invoke({"solve", "--instance", toy_path("det_t2"), "--algo", "nope"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  {
    std::ofstream f(path("broken.json"));
    f << "{\"type\": \"deterministic\", \"x0\": [1";
  }
  EXPECT_EQ(invoke({"oracle", "--instance", path("broken.json")}).code, 1);

  // Stage 2 needs y = -1 - x with y, x >= 0.
  DeterministicModel bad;
  StageModel s1, s2;
  s1.A = Eigen::MatrixXd::Ones(1, 1);
  s1.B = Eigen::MatrixXd::Zero(1, 1);
  s1.b = Eigen::VectorXd::Ones(1);
  s1.c = Eigen::VectorXd::Ones(1);
  s2 = s1;
  s2.B = Eigen::MatrixXd::Ones(1, 1);
  s2.b = Eigen::VectorXd::Constant(1, -1.0);
  bad.stages = {s1, s2};
  bad.x0 = Eigen::VectorXd::Zero(1);
  bad.floors = {0.0};
  write_json_file(path("bad.json"), model_to_json(bad));
  const Outcome f = invoke({"solve", "--instance", path("bad.json"), "--algo", "ddp", "--out",
                         path("bad.csv")});
  EXPECT_EQ(f.code, 2) << f.err;
  EXPECT_NE(f.err.find("solver fault"), std::string::npos);
  EXPECT_EQ(slurp(path("bad.csv")), "iter,lb,ub,gap,wall_ms\n");

  ASSERT_EQ(invoke({"gen", "--T", "5", "--n", "1", "--M", "11", "--out", path("big.json")}).code, 0);
  const Outcome g = invoke({"oracle", "--instance", path("big.json")});
  EXPECT_EQ(g.code, 3);
  EXPECT_NE(g.err.find("oracle guard"), std::string::npos);
}

TEST_F(Cli, PoolsRoundTrip) {
  const DeterministicModel m = testing_support::load_det_toy("det_t5");
  const DdpRun run = run_iddp(m, ScheduleSpec::exact());
  const json j = pools_to_json(run.pools);
  const auto back = pools_from_json(j);
  ASSERT_EQ(back.size(), run.pools.size());
  for (std::size_t t = 0; t < back.size(); ++t) {
    ASSERT_EQ(back[t].size(), run.pools[t].size());
    for (std::size_t i = 0; i < back[t].size(); ++i) {
      EXPECT_EQ(back[t].cuts()[i].theta, run.pools[t].cuts()[i].theta);
      EXPECT_EQ(back[t].cuts()[i].beta, run.pools[t].cuts()[i].beta);
    }
  }
  EXPECT_EQ(pools_to_json(back).dump(), j.dump());
}

TEST_F(Cli, EmittedModelsParseBackEqual) {
  ASSERT_EQ(invoke({"gen", "--T", "6", "--n", "4", "--out", path("p.json")}).code, 0);
  const json file = read_json_file(path("p.json"));
  const LoadedModel m = model_from_json(file);
  EXPECT_EQ(model_to_json(m.model).dump(), file.dump());
  for (const auto& name : {"det_t3", "stoch_t4_m3"}) {
    const json once = model_to_json(testing_support::load_toy(name).model);
    EXPECT_EQ(model_to_json(model_from_json(once).model).dump(), once.dump()) << name;
  }
}

TEST_F(Cli, OracleOnOneStage) {
  DeterministicModel d;
  StageModel s;
  s.A = Eigen::MatrixXd::Ones(1, 2);
  s.B = Eigen::MatrixXd::Zero(1, 1);
  s.b = Eigen::VectorXd::Constant(1, 2.0);
  s.c = (Eigen::VectorXd(2) << 3.0, 1.5).finished();
  d.stages = {s};
  d.x0 = Eigen::VectorXd::Zero(1);
  write_json_file(path("one.json"), model_to_json(d));
  const Outcome r = invoke({"oracle", "--instance", path("one.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "v_star=3\n");
}

TEST_F(Cli, CompareRejectsMixedInstances) {
  RunConfig a;
  a.instance = toy_path("stoch_t3_m2");
  RunConfig b = a;
  b.instance = toy_path("stoch_t4_m3");
  write_json_file(path("a.json"), config_to_json(a));
  write_json_file(path("b.json"), config_to_json(b));
  EXPECT_EQ(invoke({"compare", "--configs", path("a.json"), path("b.json")}).code, 1);
  EXPECT_EQ(invoke({"compare", "--configs", path("a.json")}).code, 1);
}

TEST_F(Cli, ComparePortfolioAgainstSddp) {
  ASSERT_EQ(invoke({"gen", "--T", "3", "--n", "2", "--M", "3", "--out", path("p.json")}).code, 0);
  const Outcome r = invoke({"compare", "--instance", path("p.json"), "--presets", "sddp,isddp-lp1",
                            "--paths", "20", "--report", path("rep.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("baseline sddp:"), std::string::npos);
  std::istringstream rep(slurp(path("rep.csv")));
  std::string header, row;
  std::getline(rep, header);
  std::getline(rep, row);
  EXPECT_EQ(row.substr(0, 10), "isddp-lp1,");
  // variant,T,eps_bar,eps0,cpu_ratio,...
  std::vector<std::string> cells;
  std::istringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
  ASSERT_GE(cells.size(), 5u);
  EXPECT_EQ(cells[1], "3");
  EXPECT_GT(std::stod(cells[4]), 0.0);
}
