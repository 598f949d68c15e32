#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/interval.hpp"
#include "shapeci/normal.hpp"
#include "shapeci/white_noise.hpp"

namespace shapeci {

/// Noise scale shared by both white-noise procedures: sigma_j^2 = 2^{j-1} / n.
inline double sigma_j(int j, long n) {
  if (j < 1 || n < 1) throw DomainError("sigma_j: need j >= 1 and n >= 1");
  return std::sqrt(std::ldexp(1.0, j - 1) / static_cast<double>(n));
}

/// One-sided estimators at level j plus the independent local-change statistic.
struct MonotoneLevel {
  int j = 0;
  double delta_r = 0.0;  // nonnegative bias
  double delta_l = 0.0;  // nonpositive bias
  double xi = 0.0;
  double sigma = 0.0;
};

struct MonotoneWnStats {
  double t0 = 0.0;
  long n = 0;
  std::vector<MonotoneLevel> levels;  // consecutive j from levels.front().j
  LevelChoice choice;

  int j_min() const { return levels.front().j; }
  int j_max() const { return levels.back().j; }

  const MonotoneLevel& level(int j) const {
    if (levels.empty() || j < j_min() || j > j_max()) {
      throw DomainError("level " + std::to_string(j) + " not in stats");
    }
    return levels[static_cast<std::size_t>(j - j_min())];
  }
};

/// delta_j^R, delta_j^L and xi_j at level j around t0.
inline MonotoneLevel estimators_m(const DyadicPath& path, double t0, int j) {
  if (j < min_level_monotone(t0)) {
    throw DomainError("level j = " + std::to_string(j) + " is below the admissible floor at t0");
  }
  const double h = dyadic(j);
  const double scale = std::ldexp(1.0, j);
  const double y0 = path.at(t0);
  MonotoneLevel lv;
  lv.j = j;
  lv.delta_r = scale * (path.at(t0 + h) - y0);
  lv.delta_l = scale * (y0 - path.at(t0 - h));
  lv.xi = 0.5 * scale * (path.at(t0 + 2.0 * h) - path.at(t0 + h)) -
          0.5 * scale * (path.at(t0 - h) - path.at(t0 - 2.0 * h));
  lv.sigma = sigma_j(j, path.n);
  return lv;
}

inline MonotoneWnStats monotone_stats(const DyadicPath& path, double t0, int j_max) {
  MonotoneWnStats s;
  s.t0 = t0;
  s.n = path.n;
  const int j_min = min_level_monotone(t0);
  if (j_max < j_min) throw DomainError("j_max below the admissible floor");
  for (int j = j_min; j <= j_max; ++j) s.levels.push_back(estimators_m(path, t0, j));
  s.choice = LevelChoice{j_min, false};
  return s;
}

/// [delta^L - z_{a/2} sqrt2 sigma_j, delta^R + z_{a/2} sqrt2 sigma_j]; empty if inverted.
inline Interval ci_m_fixed(const MonotoneLevel& lv, double alpha) {
  check_alpha(alpha);
  const double half = z_upper(alpha / 2.0) * std::numbers::sqrt2 * lv.sigma;
  return Interval::from_endpoints(lv.delta_l - half, lv.delta_r + half);
}

inline Interval ci_m_fixed(const MonotoneWnStats& stats, int j, double alpha) {
  return ci_m_fixed(stats.level(j), alpha);
}

/// First j with xi_j <= (3/2) z_a sigma_j; the cap (flagged) if none qualifies.
inline LevelChoice select_j_m(const MonotoneWnStats& stats, double alpha) {
  check_alpha(alpha);
  if (stats.levels.empty()) throw DomainError("select_j_m: no levels");
  const double z = z_upper(alpha);
  for (const auto& lv : stats.levels) {
    if (lv.xi <= 1.5 * z * lv.sigma) return {lv.j, false};
  }
  return {stats.j_max(), true};
}

struct MonotoneWnResult {
  Interval ci;
  MonotoneWnStats stats;
};

/// Adaptive interval for f(t0) over nondecreasing f. j_max <= 0 selects floor(log2 n).
inline MonotoneWnResult ci_m_adaptive(const DyadicPath& path, double t0, double alpha,
                                      int j_max = 0) {
  check_alpha(alpha);
  if (j_max <= 0) j_max = default_j_max(path.n);
  MonotoneWnResult r{{}, monotone_stats(path, t0, j_max)};
  r.stats.choice = select_j_m(r.stats, alpha);
  r.ci = ci_m_fixed(r.stats, r.stats.choice.j, alpha);
  return r;
}

// Exact expectations through the drift integral.

inline double expected_delta_r(const FunctionSpec& f, double t0, int j) {
  const double h = dyadic(j);
  return f.integrate(t0, t0 + h) / h;
}

inline double expected_delta_l(const FunctionSpec& f, double t0, int j) {
  const double h = dyadic(j);
  return f.integrate(t0 - h, t0) / h;
}

inline double expected_xi(const FunctionSpec& f, double t0, int j) {
  const double h = dyadic(j);
  return (f.integrate(t0 + h, t0 + 2.0 * h) - f.integrate(t0 - 2.0 * h, t0 - h)) / (2.0 * h);
}

struct JStar {
  int j = 0;
  double sigma = 0.0;
};

/// Oracle resolution level: smallest admissible j with E xi_j <= z_a sigma_j.
inline JStar j_star_m(const FunctionSpec& f, long n, double alpha, double t0 = 0.0) {
  check_alpha(alpha);
  const double z = z_upper(alpha);
  for (int j = min_level_monotone(t0); j < 62; ++j) {
    const double s = sigma_j(j, n);
    if (expected_xi(f, t0, j) <= z * s) return {j, s};
  }
  throw ConvergenceError("j_star_m: no level qualified");
}

/// Expected-length cap 1.21 (3 z_a + 2 sqrt2 z_{a/2}) sigma_{j*} for the adaptive interval.
inline double monotone_length_cap(double alpha, double sigma_star) {
  return 1.21 * (3.0 * z_upper(alpha) + 2.0 * std::numbers::sqrt2 * z_upper(alpha / 2.0)) *
         sigma_star;
}

}  // namespace shapeci
