// Per-iteration bound history of an engine run.
#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace isddp {

enum class RunStatus { Converged, IterLimit };

inline const char* to_string(RunStatus s) {
  return s == RunStatus::Converged ? "converged" : "iter_limit";
}

struct IterationRecord {
  int iteration = 0;
  double lb = 0.0;
  double ub = 0.0;
  double gap = 0.0;
  double wall_ms = 0.0;
  int n_paths = 1;
  std::vector<double> eps_used;    // backward budget requested per stage (index t-1)
  std::vector<double> delta_used;  // forward budget requested per stage (index t-1)
  bool ub_single_sample = false;
};

struct RunLog {
  std::vector<IterationRecord> iterations;
  RunStatus status = RunStatus::IterLimit;
  double total_ms = 0.0;
  double eps_bar = 0.0;
  double eps0 = 0.0;
  bool stochastic = false;

  const IterationRecord& last() const { return iterations.back(); }
};

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// CSV of the bound history. Deterministic runs: iter,lb,ub,gap,wall_ms.
/// Stochastic runs add n_paths, eps_bar and eps0. `with_timing = false`
/// drops wall_ms so two runs can be compared byte for byte.
inline void write_csv_header(std::ostream& os, bool stochastic, bool with_timing = true) {
  os << "iter,lb,ub,gap";
  if (stochastic) os << ",n_paths";
  if (with_timing) os << ",wall_ms";
  if (stochastic) os << ",eps_bar,eps0";
  os << '\n';
}

inline void write_csv_row(std::ostream& os, const RunLog& log, const IterationRecord& r,
                          bool with_timing = true) {
  os << r.iteration << ',' << detail::fmt_double(r.lb) << ',' << detail::fmt_double(r.ub) << ','
     << detail::fmt_double(r.gap);
  if (log.stochastic) os << ',' << r.n_paths;
  if (with_timing) os << ',' << detail::fmt_double(r.wall_ms);
  if (log.stochastic) {
    os << ',' << detail::fmt_double(log.eps_bar) << ',' << detail::fmt_double(log.eps0);
  }
  os << '\n';
}

inline void write_csv(std::ostream& os, const RunLog& log, bool with_timing = true) {
  write_csv_header(os, log.stochastic, with_timing);
  for (const auto& r : log.iterations) write_csv_row(os, log, r, with_timing);
}

/// Called after each iteration is appended to the log (e.g. to stream the CSV).
using IterationCallback = std::function<void(const RunLog&, const IterationRecord&)>;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace isddp
