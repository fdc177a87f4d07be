// JSON formats for models, cut pools, run configurations and run summaries.
// Doubles are written in shortest round-trip form, so write/read is lossless.
#pragma once

#include "isddp/cuts.hpp"
#include "isddp/model.hpp"
#include "isddp/run_log.hpp"
#include "isddp/schedules.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isddp {

using json = nlohmann::json;

namespace detail {

inline json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = v[i];
  return out;
}

/// Row-major nested arrays; `cols` disambiguates empty matrices.
inline json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
  return rows;
}

inline Eigen::MatrixXd mat_from_json(const json& j, Index cols) {
  Eigen::MatrixXd m(static_cast<Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = vec_from_json(j[r]);
    if (row.size() != cols) throw ModelError("json: ragged matrix");
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace detail

inline json stage_to_json(const StageModel& s) {
  return {{"A", detail::mat_to_json(s.A)},
          {"B", detail::mat_to_json(s.B)},
          {"b", detail::vec_to_json(s.b)},
          {"c", detail::vec_to_json(s.c)},
          {"state_dim", s.state_dim()}};
}

inline StageModel stage_from_json(const json& j) {
  StageModel s;
  s.c = detail::vec_from_json(j.at("c"));
  s.b = detail::vec_from_json(j.at("b"));
  s.A = detail::mat_from_json(j.at("A"), s.c.size());
  s.B = detail::mat_from_json(j.at("B"), j.at("state_dim").get<Index>());
  return s;
}

inline json model_to_json(const DeterministicModel& m) {
  json stages = json::array();
  for (const auto& s : m.stages) stages.push_back(stage_to_json(s));
  return {{"type", "deterministic"},
          {"x0", detail::vec_to_json(m.x0)},
          {"floors", m.floors},
          {"stages", stages}};
}

inline json model_to_json(const StochasticModel& m) {
  json stages = json::array();
  for (const auto& st : m.stages) {
    json reals = json::array();
    for (const auto& r : st.realizations) {
      json jr = stage_to_json(r.data);
      jr["prob"] = r.prob;
      reals.push_back(jr);
    }
    stages.push_back({{"realizations", reals}});
  }
  return {{"type", "stochastic"},
          {"x0", detail::vec_to_json(m.x0)},
          {"floors", m.floors},
          {"stage1", stage_to_json(m.stage1)},
          {"stages", stages}};
}

/// Any model file as a stochastic model; `deterministic` records the file type.
struct LoadedModel {
  StochasticModel model;
  bool deterministic = false;
};

inline LoadedModel model_from_json(const json& j) {
  LoadedModel out;
  const std::string type = j.at("type").get<std::string>();
  if (type == "deterministic") {
    DeterministicModel d;
    d.x0 = detail::vec_from_json(j.at("x0"));
    d.floors = j.at("floors").get<std::vector<double>>();
    for (const auto& s : j.at("stages")) d.stages.push_back(stage_from_json(s));
    out.model = to_stochastic(d);
    out.deterministic = true;
  } else if (type == "stochastic") {
    StochasticModel& m = out.model;
    m.x0 = detail::vec_from_json(j.at("x0"));
    m.floors = j.at("floors").get<std::vector<double>>();
    m.stage1 = stage_from_json(j.at("stage1"));
    for (const auto& st : j.at("stages")) {
      StochasticStageModel stage;
      for (const auto& r : st.at("realizations")) {
        stage.realizations.push_back({stage_from_json(r), r.at("prob").get<double>()});
      }
      m.stages.push_back(std::move(stage));
    }
    m.validate();
  } else {
    throw ModelError("model json: unknown type '" + type + "'");
  }
  return out;
}

/// The deterministic view of a model with a single realization per stage.
inline DeterministicModel to_deterministic(const StochasticModel& m) {
  DeterministicModel d;
  d.x0 = m.x0;
  d.floors = m.floors;
  d.stages.push_back(m.stage1);
  for (int t = 2; t <= m.horizon(); ++t) {
    if (m.num_realizations(t) != 1) {
      throw ModelError("stage " + std::to_string(t) + " has several realizations");
    }
    d.stages.push_back(m.realization(t, 0));
  }
  return d;
}

inline bool is_deterministic(const StochasticModel& m) {
  for (int t = 2; t <= m.horizon(); ++t) {
    if (m.num_realizations(t) != 1) return false;
  }
  return true;
}

inline json pools_to_json(const std::vector<CutPool>& pools) {
  json out = json::array();
  for (std::size_t i = 0; i < pools.size(); ++i) {
    json cuts = json::array();
    for (const Cut& c : pools[i].cuts()) {
      cuts.push_back({{"theta", c.theta},
                      {"beta", detail::vec_to_json(c.beta)},
                      {"stage", c.stage},
                      {"iteration", c.iteration},
                      {"eps_used", c.eps_used}});
    }
    out.push_back({{"stage", static_cast<int>(i) + 2},
                   {"state_dim", pools[i].state_dim()},
                   {"floor", pools[i].floor()},
                   {"cuts", cuts}});
  }
  return out;
}

inline std::vector<CutPool> pools_from_json(const json& j) {
  std::vector<CutPool> pools;
  for (const auto& jp : j) {
    if (jp.at("stage").get<int>() != static_cast<int>(pools.size()) + 2) {
      throw ModelError("pools json: pools must be listed for stages 2, 3, ... in order");
    }
    CutPool pool(jp.at("state_dim").get<Index>(), jp.at("floor").get<double>());
    for (const auto& jc : jp.at("cuts")) {
      Cut c;
      c.theta = jc.at("theta").get<double>();
      c.beta = detail::vec_from_json(jc.at("beta"));
      c.stage = jc.at("stage").get<int>();
      c.iteration = jc.at("iteration").get<int>();
      c.eps_used = jc.at("eps_used").get<double>();
      pool.add(std::move(c));
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

/// Checks that warm-start pools fit the model (one pool per stage 2..T, matching dimensions).
inline void check_pools(const StochasticModel& m, const std::vector<CutPool>& pools) {
  if (static_cast<int>(pools.size()) != m.horizon() - 1) {
    throw ModelError("pools: expected one pool per stage 2..T");
  }
  for (int t = 2; t <= m.horizon(); ++t) {
    if (pools[static_cast<std::size_t>(t - 2)].state_dim() != m.stage(t).state_dim()) {
      throw ModelError("pools: state dimension mismatch at stage " + std::to_string(t));
    }
  }
}

enum class Algorithm { Ddp, Iddp, Sddp, Isddp };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Ddp: return "ddp";
    case Algorithm::Iddp: return "iddp";
    case Algorithm::Sddp: return "sddp";
    case Algorithm::Isddp: return "isddp";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "ddp") return Algorithm::Ddp;
  if (s == "iddp") return Algorithm::Iddp;
  if (s == "sddp") return Algorithm::Sddp;
  if (s == "isddp") return Algorithm::Isddp;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

struct RunConfig {
  Algorithm algorithm = Algorithm::Isddp;
  ScheduleSpec schedule;
  int n_paths = 1;
  double gap_tol = 0.05;
  double tol = 1e-6;  // absolute Ub - Lb target of the deterministic engines
  int max_iter = 100;
  std::uint64_t seed = 0;
  bool enumerate_ub = false;
  std::string instance;
  std::string output;

  /// ddp and sddp always run the exact schedule.
  ScheduleSpec effective_schedule() const {
    if (algorithm == Algorithm::Ddp || algorithm == Algorithm::Sddp) return ScheduleSpec::exact();
    return schedule;
  }

  void validate() const {
    schedule.validate();
    if (n_paths < 1) throw std::invalid_argument("config: paths must be >= 1");
    if (!(gap_tol > 0.0 && gap_tol < 1.0)) throw std::invalid_argument("config: gap_tol must lie in (0, 1)");
    if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("config: max_iter must be >= 1");
  }
};

inline json schedule_to_json(const ScheduleSpec& s) {
  return {{"mode", to_string(s.mode)},
          {"eps_bar", s.eps_bar},
          {"eps0", s.eps0},
          {"delta1", s.delta1},
          {"constant_delta_bar", s.constant_delta_bar},
          {"constant_eps_bar", s.constant_eps_bar}};
}

inline ScheduleSpec schedule_from_json(const json& j) {
  ScheduleSpec s;
  s.mode = parse_schedule_mode(j.value("mode", std::string("exact")));
  s.eps_bar = j.value("eps_bar", s.eps_bar);
  s.eps0 = j.value("eps0", s.eps0);
  s.delta1 = j.value("delta1", s.delta1);
  s.constant_delta_bar = j.value("constant_delta_bar", s.constant_delta_bar);
  s.constant_eps_bar = j.value("constant_eps_bar", s.constant_eps_bar);
  return s;
}

inline json config_to_json(const RunConfig& c) {
  return {{"algorithm", to_string(c.algorithm)},
          {"schedule", schedule_to_json(c.schedule)},
          {"n_paths", c.n_paths},
          {"gap_tol", c.gap_tol},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"seed", c.seed},
          {"enumerate_ub", c.enumerate_ub},
          {"instance", c.instance},
          {"output", c.output}};
}

/// Missing keys keep the values already in `base`.
inline RunConfig config_from_json(const json& j, RunConfig base = {}) {
  if (j.contains("algorithm")) base.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
  if (j.contains("schedule")) base.schedule = schedule_from_json(j["schedule"]);
  base.n_paths = j.value("n_paths", base.n_paths);
  base.gap_tol = j.value("gap_tol", base.gap_tol);
  base.tol = j.value("tol", base.tol);
  base.max_iter = j.value("max_iter", base.max_iter);
  base.seed = j.value("seed", base.seed);
  base.enumerate_ub = j.value("enumerate_ub", base.enumerate_ub);
  base.instance = j.value("instance", base.instance);
  base.output = j.value("output", base.output);
  return base;
}

inline json summary_to_json(const RunConfig& cfg, const RunLog& log) {
  json j = {{"algorithm", to_string(cfg.algorithm)},
            {"schedule", schedule_to_json(cfg.effective_schedule())},
            {"status", to_string(log.status)},
            {"iterations", log.iterations.size()},
            {"total_ms", log.total_ms}};
  if (!log.iterations.empty()) {
    const auto& r = log.last();
    j["lb"] = r.lb;
    j["ub"] = r.ub;
    j["gap"] = r.gap;
    if (r.ub_single_sample) j["ub_single_sample"] = true;
  }
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace isddp
