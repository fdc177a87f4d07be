// Inexactness schedules: which forward (delta) and backward (eps) budgets a
// subproblem of stage t at iteration k is solved with.
#pragma once

#include "isddp/lp_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace isddp {

enum class ScheduleMode { Exact, Relative, Absolute, ConstantBounded };

inline const char* to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::Exact: return "exact";
    case ScheduleMode::Relative: return "relative";
    case ScheduleMode::Absolute: return "absolute";
    case ScheduleMode::ConstantBounded: return "constant";
  }
  return "?";
}

inline ScheduleMode parse_schedule_mode(const std::string& s) {
  if (s == "exact") return ScheduleMode::Exact;
  if (s == "relative") return ScheduleMode::Relative;
  if (s == "absolute") return ScheduleMode::Absolute;
  if (s == "constant") return ScheduleMode::ConstantBounded;
  throw std::invalid_argument("unknown schedule mode '" + s + "'");
}

inline constexpr double kNegligibleError = 1e-12;

struct ScheduleSpec {
  ScheduleMode mode = ScheduleMode::Exact;
  double eps_bar = kNegligibleError;
  double eps0 = kNegligibleError;
  double delta1 = kNegligibleError;
  double constant_delta_bar = 0.0;
  double constant_eps_bar = 0.0;

  void validate() const {
    if (eps_bar < 0 || eps0 < 0 || delta1 < 0 || constant_delta_bar < 0 || constant_eps_bar < 0) {
      throw std::invalid_argument("schedule: error parameters must be nonnegative");
    }
    if (mode == ScheduleMode::Relative || mode == ScheduleMode::Absolute) {
      if (!(eps0 <= eps_bar && eps_bar < 1.0)) {
        throw std::invalid_argument("schedule: need eps0 <= eps_bar < 1");
      }
    }
  }

  static ScheduleSpec exact() { return {}; }
  static ScheduleSpec relative(double eps_bar, double eps0) {
    ScheduleSpec s;
    s.mode = ScheduleMode::Relative;
    s.eps_bar = eps_bar;
    s.eps0 = eps0;
    return s;
  }
  static ScheduleSpec absolute(double eps_bar, double eps0) {
    ScheduleSpec s = relative(eps_bar, eps0);
    s.mode = ScheduleMode::Absolute;
    return s;
  }
  static ScheduleSpec constant(double delta_bar, double eps_bar) {
    ScheduleSpec s;
    s.mode = ScheduleMode::ConstantBounded;
    s.constant_delta_bar = delta_bar;
    s.constant_eps_bar = eps_bar;
    return s;
  }
};

/// (1/k) [eps_bar - (eps_bar - eps0)/(T-2) (t-2)], linear in t from eps_bar at
/// t=2 down to eps0 at t=T. With T=2 only t=2 exists and the value is eps_bar/k.
inline double rel_err(int t, int k, int T, const ScheduleSpec& spec) {
  if (t < 2 || t > T) throw std::invalid_argument("rel_err: stage must satisfy 2 <= t <= T");
  if (k < 1) throw std::invalid_argument("rel_err: iteration must be >= 1");
  if (spec.mode == ScheduleMode::Exact) return kNegligibleError;
  double v = spec.eps_bar;
  if (T > 2) v -= (spec.eps_bar - spec.eps0) / static_cast<double>(T - 2) * (t - 2);
  return v / static_cast<double>(k);
}

/// max(1, |previous backward value|) * rel_err.
inline double abs_err(int t, int k, int T, const ScheduleSpec& spec, double prev_backward_value) {
  return std::max(1.0, std::abs(prev_backward_value)) * rel_err(t, k, T, spec);
}

/// Budget for the forward solve of stage t at iteration k.
inline Tolerance forward_tolerance(const ScheduleSpec& spec, int t, int k, int T) {
  if (t == 1) return Tolerance::abs(spec.delta1);
  switch (spec.mode) {
    case ScheduleMode::Exact: return Tolerance::rel(kNegligibleError);
    case ScheduleMode::Relative: return Tolerance::rel(rel_err(t, k, T, spec));
    case ScheduleMode::Absolute: return Tolerance::abs(spec.delta1);
    case ScheduleMode::ConstantBounded: return Tolerance::abs(spec.constant_delta_bar);
  }
  return {};
}

/// Budget for the backward dual solves of stage t >= 2 at iteration k.
/// `forward_value` is the stage-t objective recorded in this iteration's forward pass.
inline Tolerance backward_tolerance(const ScheduleSpec& spec, int t, int k, int T,
                                    double forward_value) {
  switch (spec.mode) {
    case ScheduleMode::Exact: return Tolerance::rel(kNegligibleError);
    case ScheduleMode::Relative: return Tolerance::rel(rel_err(t, k, T, spec));
    case ScheduleMode::Absolute: return Tolerance::abs(abs_err(t, k, T, spec, forward_value));
    case ScheduleMode::ConstantBounded: return Tolerance::abs(spec.constant_eps_bar);
  }
  return {};
}

/// Named presets: "sddp" and "isddp-lp1" .. "isddp-lp4".
inline ScheduleSpec preset(const std::string& name) {
  if (name == "sddp" || name == "exact") return ScheduleSpec::relative(1e-12, 1e-12);
  if (name == "isddp-lp1") return ScheduleSpec::relative(1e-1, 1e-12);
  if (name == "isddp-lp2") return ScheduleSpec::relative(1e-2, 1e-12);
  if (name == "isddp-lp3") return ScheduleSpec::relative(1e-4, 1e-12);
  if (name == "isddp-lp4") return ScheduleSpec::relative(1e-6, 1e-12);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace isddp
