#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/interval.hpp"
#include "shapeci/monotone_wn.hpp"
#include "shapeci/normal.hpp"
#include "shapeci/white_noise.hpp"

namespace shapeci {

/// Symmetric local averages at levels j and j+1 and the derived statistics.
struct ConvexLevel {
  int j = 0;
  double delta = 0.0;        // delta_j, nonnegative bias
  double delta_next = 0.0;   // delta_{j+1}
  double delta_tilde = 0.0;  // 2 delta_{j+1} - delta_j, nonpositive bias
  double t = 0.0;            // T_j = delta_j - delta_{j+1}
  double sigma = 0.0;        // sigma_j
};

struct ConvexWnStats {
  double t0 = 0.0;
  long n = 0;
  std::vector<ConvexLevel> levels;
  LevelChoice choice;

  int j_min() const { return levels.front().j; }
  int j_max() const { return levels.back().j; }

  const ConvexLevel& level(int j) const {
    if (levels.empty() || j < j_min() || j > j_max()) {
      throw DomainError("level " + std::to_string(j) + " not in stats");
    }
    return levels[static_cast<std::size_t>(j - j_min())];
  }
};

namespace detail {
inline double delta_c(const DyadicPath& path, double t0, int j) {
  const double h = dyadic(j);
  return std::ldexp(1.0, j - 1) * (path.at(t0 + h) - path.at(t0 - h));
}
}  // namespace detail

/// delta_j, delta_{j+1} and T_j around t0.
inline ConvexLevel estimators_c(const DyadicPath& path, double t0, int j) {
  if (j < min_level_convex(t0)) {
    throw DomainError("level j = " + std::to_string(j) + " is below the admissible floor at t0");
  }
  ConvexLevel lv;
  lv.j = j;
  lv.delta = detail::delta_c(path, t0, j);
  lv.delta_next = detail::delta_c(path, t0, j + 1);
  lv.delta_tilde = 2.0 * lv.delta_next - lv.delta;
  lv.t = lv.delta - lv.delta_next;
  lv.sigma = sigma_j(j, path.n);
  return lv;
}

inline ConvexWnStats convex_stats(const DyadicPath& path, double t0, int j_max) {
  ConvexWnStats s;
  s.t0 = t0;
  s.n = path.n;
  const int j_min = min_level_convex(t0);
  if (j_max < j_min) throw DomainError("j_max below the admissible floor");
  for (int j = j_min; j <= j_max; ++j) s.levels.push_back(estimators_c(path, t0, j));
  s.choice = LevelChoice{j_min, false};
  return s;
}

/// Fixed-level interval
///   [2 delta_{j+1} - delta_j - z_{a/2} sqrt5 sigma_j, delta_{j+1} + z_{a/2} sigma_{j+1}].
/// Away from the origin the lower end uses delta_{j+1} - (T_j)_+ instead.
inline Interval ci_c_fixed(const ConvexLevel& lv, double alpha, bool off_center = false) {
  check_alpha(alpha);
  const double z = z_upper(alpha / 2.0);
  const double sigma_next = std::numbers::sqrt2 * lv.sigma;
  const double base = off_center ? lv.delta_next - std::max(lv.t, 0.0) : lv.delta_tilde;
  return Interval::from_endpoints(base - z * std::sqrt(5.0) * lv.sigma,
                                  lv.delta_next + z * sigma_next);
}

inline Interval ci_c_fixed(const ConvexWnStats& stats, int j, double alpha) {
  return ci_c_fixed(stats.level(j), alpha, stats.t0 != 0.0);
}

/// First j with T_j <= z_a sigma_j (inclusive); the cap (flagged) if none qualifies.
inline LevelChoice select_j_c(const ConvexWnStats& stats, double alpha) {
  check_alpha(alpha);
  if (stats.levels.empty()) throw DomainError("select_j_c: no levels");
  const double z = z_upper(alpha);
  for (const auto& lv : stats.levels) {
    if (lv.t <= z * lv.sigma) return {lv.j, false};
  }
  return {stats.j_max(), true};
}

struct ConvexWnResult {
  Interval ci;
  ConvexWnStats stats;
};

/// Adaptive interval for f(t0) over convex f: the fixed-level interval at
/// level alpha/6, evaluated at the selected j. j_max <= 0 selects floor(log2 n).
inline ConvexWnResult ci_c_adaptive(const DyadicPath& path, double t0, double alpha,
                                    int j_max = 0) {
  check_alpha(alpha);
  if (j_max <= 0) j_max = default_j_max(path.n);
  ConvexWnResult r{{}, convex_stats(path, t0, j_max)};
  r.stats.choice = select_j_c(r.stats, alpha);
  r.ci = ci_c_fixed(r.stats, r.stats.choice.j, alpha / 6.0);
  return r;
}

inline double expected_delta_c(const FunctionSpec& f, double t0, int j) {
  const double h = dyadic(j);
  return f.integrate(t0 - h, t0 + h) / (2.0 * h);
}

inline double expected_t(const FunctionSpec& f, double t0, int j) {
  return expected_delta_c(f, t0, j) - expected_delta_c(f, t0, j + 1);
}

/// Slacks of the two convex bias inequalities at level j (nonnegative when they hold):
///   [0] Bias(delta_{j+1}),  [1] Bias(delta_j)/2 - Bias(delta_{j+1}),
///   [2] E delta_j - 3 E delta_{j+1} + 2 E delta_{j+2}.
struct Lemma1Slack {
  double bias_nonneg = 0.0;
  double bias_halving = 0.0;
  double second_difference = 0.0;

  double min() const { return std::min({bias_nonneg, bias_halving, second_difference}); }
};

inline Lemma1Slack lemma1_slack(const FunctionSpec& f, int j, double t0 = 0.0) {
  if (!f.classify().convex) throw DomainError("lemma1_check: f is not convex");
  if (j < min_level_convex(t0)) throw DomainError("lemma1_check: level below floor");
  const double f0 = f.evaluate(t0);
  const double e0 = expected_delta_c(f, t0, j);
  const double e1 = expected_delta_c(f, t0, j + 1);
  const double e2 = expected_delta_c(f, t0, j + 2);
  return {e1 - f0, 0.5 * (e0 - f0) - (e1 - f0), e0 - 3.0 * e1 + 2.0 * e2};
}

/// Both convex bias inequalities hold with exact integrals (slack >= -tol).
inline bool lemma1_check(const FunctionSpec& f, int j, double t0 = 0.0, double tol = 1e-10) {
  return lemma1_slack(f, j, t0).min() >= -tol;
}

/// Oracle resolution level: smallest admissible j with E T_j <= (2/3) z_a sigma_j.
inline JStar j_star_c(const FunctionSpec& f, long n, double alpha, double t0 = 0.0) {
  check_alpha(alpha);
  const double z = z_upper(alpha);
  for (int j = min_level_convex(t0); j < 60; ++j) {
    const double s = sigma_j(j, n);
    if (expected_t(f, t0, j) <= (2.0 / 3.0) * z * s) return {j, s};
  }
  throw ConvergenceError("j_star_c: no level qualified");
}

/// Expected-length cap 1.25 (z_a + (sqrt5 + sqrt2) z_{a/12}) sigma_{j*}.
inline double convex_length_cap(double alpha, double sigma_star) {
  return 1.25 * (z_upper(alpha) + (std::sqrt(5.0) + std::numbers::sqrt2) * z_upper(alpha / 12.0)) *
         sigma_star;
}

}  // namespace shapeci
