// Command-line front end: gen, solve, compare, oracle.
// Exit codes: 0 success, 1 usage or input error, 2 solver fault, 3 oracle guard.
#pragma once

#include "isddp/ddp_engine.hpp"
#include "isddp/json_io.hpp"
#include "isddp/oracle.hpp"
#include "isddp/portfolio.hpp"
#include "isddp/sddp_engine.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace isddp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kSolverFault = 2, kOracleGuard = 3 };

struct SolveResult {
  RunLog log;
  std::vector<CutPool> pools;
};

/// Runs the engine selected by `cfg` on `model`.
inline SolveResult solve_instance(const RunConfig& cfg, const LoadedModel& model,
                                  std::vector<CutPool> warm_pools = {},
                                  IterationCallback on_iteration = {}) {
  cfg.validate();
  const ScheduleSpec schedule = cfg.effective_schedule();
  if (!warm_pools.empty()) check_pools(model.model, warm_pools);
  SolveResult out;
  if (cfg.algorithm == Algorithm::Ddp || cfg.algorithm == Algorithm::Iddp) {
    if (!is_deterministic(model.model)) {
      throw std::invalid_argument("ddp/iddp need an instance with one realization per stage");
    }
    DdpOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    opts.on_iteration = std::move(on_iteration);
    DdpRun run = run_iddp(to_deterministic(model.model), schedule, opts, std::move(warm_pools));
    out.log = std::move(run.log);
    out.pools = std::move(run.pools);
  } else {
    SddpOptions opts;
    opts.n_paths = cfg.n_paths;
    opts.gap_tol = cfg.gap_tol;
    opts.max_iter = cfg.max_iter;
    opts.seed = cfg.seed;
    opts.ub_mode = cfg.enumerate_ub ? UbMode::Enumerated : UbMode::Sampled;
    opts.on_iteration = std::move(on_iteration);
    SddpRun run = run_isddp(model.model, schedule, opts, std::move(warm_pools));
    out.log = std::move(run.log);
    out.pools = std::move(run.pools);
  }
  return out;
}

namespace detail {

inline std::vector<double> parse_vector(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse number '" + cell + "'");
    }
  }
  return out;
}

inline std::string fmt(double v, const char* spec = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

/// Flags shared by solve and compare. Values set on the command line override
/// the config file, which overrides the defaults.
struct SolveFlags {
  std::string config_path;
  std::string instance;
  std::string algo;
  std::string preset;
  std::string schedule_mode;
  double eps_bar = 0.0;
  double eps0 = 0.0;
  double delta_bar = 0.0;
  double constant_eps_bar = 0.0;
  int paths = 1;
  double gap_tol = 0.05;
  double tol = 1e-6;
  int max_iter = 100;
  std::uint64_t seed = 0;
  bool enumerate_ub = false;
  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["config"] = app->add_option("--config", config_path, "run configuration JSON");
    opts["instance"] = app->add_option("--instance", instance, "model JSON");
    opts["algo"] = app->add_option("--algo", algo, "ddp | iddp | sddp | isddp")
                       ->check(CLI::IsMember({"ddp", "iddp", "sddp", "isddp"}));
    opts["preset"] = app->add_option("--preset", preset, "sddp | isddp-lp1 .. isddp-lp4");
    opts["schedule-mode"] =
        app->add_option("--schedule-mode", schedule_mode, "exact | relative | absolute | constant")
            ->check(CLI::IsMember({"exact", "relative", "absolute", "constant"}));
    opts["eps-bar"] = app->add_option("--eps-bar", eps_bar, "largest relative error");
    opts["eps0"] = app->add_option("--eps0", eps0, "relative error at the last stage");
    opts["delta-bar"] = app->add_option("--delta-bar", delta_bar, "constant forward error");
    opts["constant-eps-bar"] =
        app->add_option("--constant-eps-bar", constant_eps_bar, "constant backward error");
    opts["paths"] = app->add_option("--paths", paths, "forward paths per iteration");
    opts["gap-tol"] = app->add_option("--gap-tol", gap_tol, "relative gap target (sddp/isddp)");
    opts["tol"] = app->add_option("--tol", tol, "absolute gap target (ddp/iddp)");
    opts["max-iter"] = app->add_option("--max-iter", max_iter, "iteration limit");
    opts["seed"] = app->add_option("--seed", seed, "sampling seed");
    opts["enumerate-ub"] =
        app->add_flag("--enumerate-ub", enumerate_ub, "exact policy value as upper bound");
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  RunConfig config() const {
    RunConfig c;
    c.algorithm = Algorithm::Isddp;
    c.schedule = isddp::preset("isddp-lp1");
    if (!config_path.empty()) c = config_from_json(read_json_file(config_path), c);
    if (given("instance")) c.instance = instance;
    if (given("algo")) c.algorithm = parse_algorithm(algo);
    if (given("preset")) c.schedule = isddp::preset(preset);
    if (given("schedule-mode")) c.schedule.mode = parse_schedule_mode(schedule_mode);
    if (given("eps-bar")) c.schedule.eps_bar = eps_bar;
    if (given("eps0")) c.schedule.eps0 = eps0;
    if (given("delta-bar")) c.schedule.constant_delta_bar = delta_bar;
    if (given("constant-eps-bar")) c.schedule.constant_eps_bar = constant_eps_bar;
    if (given("paths")) c.n_paths = paths;
    if (given("gap-tol")) c.gap_tol = gap_tol;
    if (given("tol")) c.tol = tol;
    if (given("max-iter")) c.max_iter = max_iter;
    if (given("seed")) c.seed = seed;
    if (given("enumerate-ub")) c.enumerate_ub = enumerate_ub;
    if (c.instance.empty()) throw std::invalid_argument("no instance given (--instance or config)");
    return c;
  }
};

inline int cmd_gen(const PortfolioSpec& spec_in, const std::string& returns_csv,
                   const std::string& out_path, std::ostream& out) {
  PortfolioSpec spec = spec_in;
  if (!returns_csv.empty()) {
    std::ifstream in(returns_csv);
    if (!in) throw std::runtime_error("cannot open '" + returns_csv + "'");
    spec.return_model = ReturnModel::FromFile;
    spec.returns_table = read_returns_csv(in);
  }
  const StochasticModel model = generate_instance(spec);
  write_json_file(out_path, model_to_json(model));
  out << "T=" << spec.T << " n=" << spec.n << " M=" << spec.M << " floors=";
  for (std::size_t i = 0; i < model.floors.size(); ++i) {
    out << (i ? "," : "") << fmt(model.floors[i], "%.6g");
  }
  out << '\n';
  return kOk;
}

inline int cmd_solve(const SolveFlags& flags, const std::string& out_path,
                     const std::string& summary_path, const std::string& cuts_in,
                     const std::string& cuts_out, bool timing, std::ostream& out) {
  RunConfig cfg = flags.config();
  if (!out_path.empty()) cfg.output = out_path;
  const LoadedModel model = model_from_json(read_json_file(cfg.instance));
  std::vector<CutPool> warm;
  if (!cuts_in.empty()) warm = pools_from_json(read_json_file(cuts_in));

  std::unique_ptr<std::ofstream> file;
  std::ostream* csv = &out;
  if (!cfg.output.empty()) {
    file = std::make_unique<std::ofstream>(cfg.output);
    if (!*file) throw std::runtime_error("cannot write '" + cfg.output + "'");
    csv = file.get();
  }
  const bool stochastic = cfg.algorithm == Algorithm::Sddp || cfg.algorithm == Algorithm::Isddp;
  write_csv_header(*csv, stochastic, timing);
  // Rows are flushed as they come so that a fault leaves a usable partial log.
  const SolveResult res = solve_instance(cfg, model, std::move(warm),
                                         [&](const RunLog& log, const IterationRecord& r) {
                                           write_csv_row(*csv, log, r, timing);
                                           csv->flush();
                                         });
  if (!cuts_out.empty()) write_json_file(cuts_out, pools_to_json(res.pools));
  const json summary = summary_to_json(cfg, res.log);
  std::string spath = summary_path;
  if (spath.empty() && !cfg.output.empty()) spath = cfg.output + ".summary.json";
  if (spath.empty()) {
    out << summary.dump() << '\n';
  } else {
    write_json_file(spath, summary);
  }
  return kOk;
}

struct CompareRow {
  std::string name;
  RunConfig cfg;
  RunLog log;
};

inline int cmd_compare(const SolveFlags& base_flags, const std::vector<std::string>& configs,
                       const std::vector<std::string>& presets, const std::string& out_path,
                       std::ostream& out) {
  std::vector<CompareRow> rows;
  if (!configs.empty()) {
    for (const auto& path : configs) {
      RunConfig c = config_from_json(read_json_file(path));
      rows.push_back({path, c, {}});
    }
    for (const auto& r : rows) {
      if (r.cfg.instance != rows.front().cfg.instance) {
        throw std::invalid_argument("compare: configs refer to different instances");
      }
    }
  } else {
    const RunConfig base = base_flags.config();
    for (const auto& p : presets) {
      RunConfig c = base;
      c.schedule = isddp::preset(p);
      c.algorithm = p == "sddp" ? Algorithm::Sddp : Algorithm::Isddp;
      rows.push_back({p, c, {}});
    }
  }
  if (rows.size() < 2) throw std::invalid_argument("compare: need at least two runs");

  const LoadedModel model = model_from_json(read_json_file(rows.front().cfg.instance));
  // Identical configurations give identical logs, so each distinct one runs once.
  std::map<std::string, RunLog> done;
  for (auto& r : rows) {
    const std::string key = config_to_json(r.cfg).dump();
    auto it = done.find(key);
    if (it == done.end()) it = done.emplace(key, solve_instance(r.cfg, model).log).first;
    r.log = it->second;
  }

  const CompareRow& base = rows.front();
  const int T = model.model.horizon();
  std::ostringstream table;
  table << "variant,T,eps_bar,eps0,cpu_ratio,iterations,baseline_iterations,status,lb,ub,gap,"
           "cpu_ms\n";
  out << "baseline " << base.name << ": " << base.log.iterations.size() << " iterations, "
      << fmt(base.log.total_ms, "%.1f") << " ms\n";
  out << "variant          eps_bar   CPU ratio  iterations\n";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CompareRow& r = rows[i];
    const double ratio = base.log.total_ms > 0.0 ? r.log.total_ms / base.log.total_ms : 1.0;
    const ScheduleSpec s = r.cfg.effective_schedule();
    table << r.name << ',' << T << ',' << fmt(s.eps_bar) << ',' << fmt(s.eps0) << ','
          << fmt(ratio, "%.4f") << ',' << r.log.iterations.size() << ','
          << base.log.iterations.size() << ',' << to_string(r.log.status) << ','
          << fmt(r.log.last().lb) << ',' << fmt(r.log.last().ub) << ',' << fmt(r.log.last().gap)
          << ',' << fmt(r.log.total_ms, "%.3f") << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %-9s %9.2f  %zu (%zu)\n", r.name.c_str(),
                  fmt(s.eps_bar, "%.0e").c_str(), ratio, r.log.iterations.size(),
                  base.log.iterations.size());
    out << line;
  }
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot write '" + out_path + "'");
    f << table.str();
  } else {
    out << table.str();
  }
  return kOk;
}

inline int cmd_oracle(const std::string& instance, int stage, const std::string& state,
                      std::ostream& out) {
  const LoadedModel model = model_from_json(read_json_file(instance));
  out << "v_star=" << fmt(extensive_form(model.model)) << '\n';
  if (stage > 0) {
    const std::vector<double> v = parse_vector(state);
    const Eigen::VectorXd x =
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
    out << "recourse_stage=" << stage << " value=" << fmt(exact_recourse(model.model, stage, x))
        << '\n';
  }
  return kOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Multistage stochastic LP solver with inexact cuts"};
  app.require_subcommand(1);

  PortfolioSpec spec;
  std::string gen_out, returns_csv, x0_str;
  double fixed_cost = -1.0;
  CLI::App* gen = app.add_subcommand("gen", "generate a portfolio instance");
  gen->add_option("--T", spec.T, "stages")->capture_default_str();
  gen->add_option("--n", spec.n, "risky assets")->capture_default_str();
  gen->add_option("--M", spec.M, "realizations per stage")->capture_default_str();
  gen->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  gen->add_option("--u", spec.u, "position limit as a fraction of wealth")->capture_default_str();
  gen->add_option("--risk-free", spec.risk_free_return, "risk-free net return per stage")
      ->capture_default_str();
  gen->add_option("--transaction-cost", fixed_cost, "fixed proportional cost (default: sampled)");
  gen->add_option("--x0", x0_str, "initial holdings, n+1 comma-separated values");
  gen->add_option("--returns-csv", returns_csv, "gross risky returns, 1+(T-1)M rows");
  gen->add_option("--out", gen_out, "model JSON")->required();

  detail::SolveFlags solve_flags;
  std::string solve_out, summary_path, cuts_in, cuts_out;
  bool no_timing = false;
  CLI::App* solve = app.add_subcommand("solve", "run an engine and write the bound history");
  solve_flags.attach(solve);
  solve->add_option("--out", solve_out, "CSV path (default: stdout)");
  solve->add_option("--summary", summary_path, "summary JSON path");
  solve->add_option("--cuts-in", cuts_in, "warm-start pools JSON");
  solve->add_option("--cuts-out", cuts_out, "final pools JSON");
  solve->add_flag("--no-timing", no_timing, "omit wall_ms so logs compare byte for byte");

  detail::SolveFlags compare_flags;
  std::vector<std::string> compare_configs;
  std::vector<std::string> compare_presets{"sddp", "isddp-lp1", "isddp-lp2", "isddp-lp3",
                                           "isddp-lp4"};
  std::string compare_out;
  CLI::App* compare = app.add_subcommand("compare", "CPU ratios and iteration counts vs the first run");
  compare_flags.attach(compare);
  compare->add_option("--configs", compare_configs, "run configuration files (first = baseline)");
  compare->add_option("--presets", compare_presets, "presets to run (first = baseline)")
      ->delimiter(',');
  compare->add_option("--report", compare_out, "report CSV path");

  std::string oracle_instance, oracle_state;
  int oracle_stage = 0;
  CLI::App* oracle = app.add_subcommand("oracle", "exact values by full enumeration");
  oracle->add_option("--instance", oracle_instance, "model JSON")->required();
  oracle->add_option("--stage", oracle_stage, "also print the cost-to-go of this stage");
  oracle->add_option("--state", oracle_state, "state entering --stage, comma-separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      if (fixed_cost >= 0.0) spec.fixed_transaction_cost = fixed_cost;
      if (!x0_str.empty()) {
        const auto v = detail::parse_vector(x0_str);
        spec.initial_holdings =
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
      }
      return detail::cmd_gen(spec, returns_csv, gen_out, out);
    }
    if (*solve) {
      return detail::cmd_solve(solve_flags, solve_out, summary_path, cuts_in, cuts_out, !no_timing,
                               out);
    }
    if (*compare) {
      return detail::cmd_compare(compare_flags, compare_configs, compare_presets, compare_out, out);
    }
    if (*oracle) {
      if (oracle_stage > 0 && oracle_state.empty()) {
        err << "error: --stage needs --state\n";
        return kUsage;
      }
      return detail::cmd_oracle(oracle_instance, oracle_stage, oracle_state, out);
    }
  } catch (const OracleGuardError& e) {
    err << "oracle guard: " << e.what() << '\n';
    return kOracleGuard;
  } catch (const SolverFault& e) {
    err << "solver fault: " << e.what() << '\n';
    return kSolverFault;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace isddp::cli
