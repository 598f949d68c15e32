#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/interval.hpp"
#include "shapeci/normal.hpp"
#include "shapeci/rng.hpp"
#include "shapeci/white_noise.hpp"

namespace shapeci {

/// y_i = f(i / 2n) + sigma z_i for i = -n..n; sigma is the known noise level.
struct RegressionSample {
  long n = 0;
  std::vector<double> y;  // y[i + n]
  double sigma = 0.0;

  double at(long i) const { return y[static_cast<std::size_t>(i + n)]; }
  static double design(long i, long n) { return static_cast<double>(i) / (2.0 * static_cast<double>(n)); }
};

inline RegressionSample simulate_regression(const FunctionSpec& f, long n, double sigma, SeedSpec seed) {
  if (n < 4) throw DomainError("simulate_regression: n must be >= 4");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("simulate_regression: sigma must be >= 0");
  RegressionSample s{n, std::vector<double>(static_cast<std::size_t>(2 * n + 1)), sigma};
  const NormalStream z(seed, StreamTag::Regression);
  for (long i = -n; i <= n; ++i) {
    const double noise = sigma > 0.0 ? sigma * z(static_cast<std::uint64_t>(i + n)) : 0.0;
    s.y[static_cast<std::size_t>(i + n)] = f.evaluate(RegressionSample::design(i, n)) + noise;
  }
  return s;
}

/// Sums of y over the dyadic index blocks every estimator reads:
/// block 0 is {1}, block b >= 1 is (2^{b-1}, 2^b]; right[b] sums y_k and
/// left[b] sums y_{-k} over the block. These are sufficient for all
/// regression statistics.
struct DyadicBlocks {
  long n = 0;
  double sigma = 0.0;
  int big_j = 0;  // J = floor(log2 n)
  std::vector<double> right;
  std::vector<double> left;
};

namespace detail {
inline long block_begin(int b) { return b == 0 ? 1 : (1L << (b - 1)) + 1; }
inline long block_end(int b) { return b == 0 ? 1 : (1L << b); }
}  // namespace detail

inline DyadicBlocks blocks_from_sample(const RegressionSample& s) {
  DyadicBlocks b{s.n, s.sigma, default_j_max(s.n), {}, {}};
  b.right.assign(static_cast<std::size_t>(b.big_j + 1), 0.0);
  b.left.assign(static_cast<std::size_t>(b.big_j + 1), 0.0);
  for (int blk = 0; blk <= b.big_j; ++blk) {
    for (long k = detail::block_begin(blk); k <= detail::block_end(blk); ++k) {
      b.right[static_cast<std::size_t>(blk)] += s.at(k);
      b.left[static_cast<std::size_t>(blk)] += s.at(-k);
    }
  }
  return b;
}

/// Exact-law sampler of the block sums: block mean plus sigma sqrt(size) N(0,1).
/// Costs 2(J+1) normals per draw instead of 2n+1.
class RegressionBlockSampler {
 public:
  RegressionBlockSampler(const FunctionSpec& f, long n, double sigma) {
    if (n < 4) throw DomainError("regression: n must be >= 4");
    if (!(sigma >= 0.0)) throw DomainError("regression: sigma must be >= 0");
    mean_ = DyadicBlocks{n, sigma, default_j_max(n), {}, {}};
    const auto nb = static_cast<std::size_t>(mean_.big_j + 1);
    mean_.right.assign(nb, 0.0);
    mean_.left.assign(nb, 0.0);
    scale_.assign(nb, 0.0);
    for (int blk = 0; blk <= mean_.big_j; ++blk) {
      for (long k = detail::block_begin(blk); k <= detail::block_end(blk); ++k) {
        mean_.right[static_cast<std::size_t>(blk)] += f.evaluate(RegressionSample::design(k, n));
        mean_.left[static_cast<std::size_t>(blk)] += f.evaluate(RegressionSample::design(-k, n));
      }
      const double size = static_cast<double>(detail::block_end(blk) - detail::block_begin(blk) + 1);
      scale_[static_cast<std::size_t>(blk)] = sigma * std::sqrt(size);
    }
  }

  const DyadicBlocks& mean() const { return mean_; }

  DyadicBlocks sample(SeedSpec seed) const {
    DyadicBlocks b = mean_;
    const NormalStream z(seed, StreamTag::RegressionBlocks);
    for (std::size_t blk = 0; blk < b.right.size(); ++blk) {
      b.right[blk] += scale_[blk] * z(2 * blk);
      b.left[blk] += scale_[blk] * z(2 * blk + 1);
    }
    return b;
  }

 private:
  DyadicBlocks mean_;
  std::vector<double> scale_;
};

/// sigma_j = 2^{-j/2} sigma (regression indexing: larger j = wider window).
inline double reg_sigma_j(int j, double sigma) { return std::sqrt(std::ldexp(1.0, -j)) * sigma; }

/// tau_j^2 = (5 + 2^{-j+3} + 2^{-2j+2}) 2^{-j-1} sigma^2, the variance of delta_j^L.
inline double reg_tau_j(int j, double sigma) {
  const double v = (5.0 + std::ldexp(1.0, -j + 3) + std::ldexp(1.0, -2 * j + 2)) * std::ldexp(1.0, -j - 1);
  return std::sqrt(v) * sigma;
}

namespace detail {
// sum of block b over 0..j-1, i.e. sum_{k=1}^{2^{j-1}}.
inline double prefix(const std::vector<double>& blocks, int j) {
  double acc = 0.0;
  for (int b = 0; b < j; ++b) acc += blocks[static_cast<std::size_t>(b)];
  return acc;
}
}  // namespace detail

// ---------------------------------------------------------------- monotone

struct MonotoneRegLevel {
  int j = 0;
  double delta_r = 0.0;
  double delta_l = 0.0;
  double xi = 0.0;
  double sigma = 0.0;
};

/// delta_bar_j^R = 2^{-j+1} sum_{k<=2^{j-1}} y_k, its mirror, and
/// xi_bar_j = 2^{-j} sum_{2^{j-1}<k<=2^j} (y_k - y_{-k}).
inline MonotoneRegLevel estimators_reg_m(const DyadicBlocks& b, int j) {
  if (j < 1 || j > b.big_j) throw DomainError("estimators_reg_m: need 1 <= j <= J");
  MonotoneRegLevel lv;
  lv.j = j;
  lv.delta_r = std::ldexp(detail::prefix(b.right, j), -j + 1);
  lv.delta_l = std::ldexp(detail::prefix(b.left, j), -j + 1);
  lv.xi = std::ldexp(b.right[static_cast<std::size_t>(j)] - b.left[static_cast<std::size_t>(j)], -j);
  lv.sigma = reg_sigma_j(j, b.sigma);
  return lv;
}

struct RegMonotoneStats {
  int big_j = 0;
  std::vector<MonotoneRegLevel> levels;  // j = 1..J
  LevelChoice choice;

  const MonotoneRegLevel& level(int j) const { return levels.at(static_cast<std::size_t>(j - 1)); }
};

inline RegMonotoneStats reg_monotone_stats(const DyadicBlocks& b) {
  if (b.big_j < 1) throw DomainError("regression: J must be >= 1");
  RegMonotoneStats s;
  s.big_j = b.big_j;
  for (int j = 1; j <= b.big_j; ++j) s.levels.push_back(estimators_reg_m(b, j));
  s.choice = {1, false};
  return s;
}

/// If xi_bar_1 passes, the largest j in [1, J] whose xi_bar_j <= (3/2) z_a sigma_j
/// (gaps allowed); otherwise 1.
inline LevelChoice select_j_reg_m(const RegMonotoneStats& s, double alpha) {
  check_alpha(alpha);
  const double z = z_upper(alpha);
  auto ok = [&](const MonotoneRegLevel& lv) { return lv.xi <= 1.5 * z * lv.sigma; };
  if (!ok(s.levels.front())) return {1, false};
  int best = 1;
  for (const auto& lv : s.levels) {
    if (ok(lv)) best = lv.j;
  }
  return {best, false};
}

inline Interval ci_reg_m_fixed(const MonotoneRegLevel& lv, double alpha) {
  check_alpha(alpha);
  const double half = z_upper(alpha / 2.0) * std::numbers::sqrt2 * lv.sigma;
  return Interval::from_endpoints(lv.delta_l - half, lv.delta_r + half);
}

struct RegMonotoneResult {
  Interval ci;
  RegMonotoneStats stats;
};

inline RegMonotoneResult ci_reg_m(const DyadicBlocks& b, double alpha) {
  check_alpha(alpha);
  RegMonotoneResult r{{}, reg_monotone_stats(b)};
  r.stats.choice = select_j_reg_m(r.stats, alpha);
  r.ci = ci_reg_m_fixed(r.stats.level(r.stats.choice.j), alpha);
  return r;
}

inline RegMonotoneResult ci_reg_m(const RegressionSample& s, double alpha) {
  return ci_reg_m(blocks_from_sample(s), alpha);
}

// ------------------------------------------------------------------ convex

struct ConvexRegLevel {
  int j = 0;
  double delta_bar = 0.0;  // nonnegative, nondecreasing bias in j
  double t = std::numeric_limits<double>::quiet_NaN();        // T_j, j >= 2
  double delta_l = std::numeric_limits<double>::quiet_NaN();  // needs T_{j+1}, j <= J-1
  double tau = 0.0;
  double sigma = 0.0;
};

inline double reg_delta_bar(const DyadicBlocks& b, int j) {
  return std::ldexp(detail::prefix(b.right, j) + detail::prefix(b.left, j), -j);
}

/// delta_bar_j, T_j = delta_bar_j - delta_bar_{j-1},
/// delta_j^L = delta_bar_j - (1 + 2^{-(j-1)}) T_{j+1} and tau_j.
inline ConvexRegLevel estimators_reg_c(const DyadicBlocks& b, int j) {
  if (j < 1 || j > b.big_j) throw DomainError("estimators_reg_c: need 1 <= j <= J");
  ConvexRegLevel lv;
  lv.j = j;
  lv.delta_bar = reg_delta_bar(b, j);
  if (j >= 2) lv.t = lv.delta_bar - reg_delta_bar(b, j - 1);
  if (j + 1 <= b.big_j) {
    const double t_next = reg_delta_bar(b, j + 1) - lv.delta_bar;
    lv.delta_l = lv.delta_bar - (1.0 + std::ldexp(1.0, -(j - 1))) * t_next;
  }
  lv.tau = reg_tau_j(j, b.sigma);
  lv.sigma = reg_sigma_j(j, b.sigma);
  return lv;
}

struct RegConvexStats {
  int big_j = 0;
  std::vector<ConvexRegLevel> levels;  // j = 1..J
  LevelChoice choice;

  const ConvexRegLevel& level(int j) const { return levels.at(static_cast<std::size_t>(j - 1)); }
};

inline RegConvexStats reg_convex_stats(const DyadicBlocks& b) {
  if (b.big_j < 3) throw DomainError("convex regression needs J >= 3 (n >= 8)");
  RegConvexStats s;
  s.big_j = b.big_j;
  for (int j = 1; j <= b.big_j; ++j) s.levels.push_back(estimators_reg_c(b, j));
  s.choice = {1, false};
  return s;
}

/// If T_2 passes, the largest j in [2, J] with T_j <= z_a sigma_j, capped at
/// J - 1 so that T_{j+1} exists (flagged when the cap binds); otherwise 1.
inline LevelChoice select_j_reg_c(const RegConvexStats& s, double alpha) {
  check_alpha(alpha);
  const double z = z_upper(alpha);
  auto ok = [&](const ConvexRegLevel& lv) { return lv.t <= z * lv.sigma; };
  if (!ok(s.level(2))) return {1, false};
  int best = 2;
  for (int j = 2; j <= s.big_j; ++j) {
    if (ok(s.level(j))) best = j;
  }
  if (best > s.big_j - 1) return {s.big_j - 1, true};
  return {best, false};
}

/// [delta_j^L - z tau_j, delta_bar_j + z sigma_j] with z = z_{a/12} for the
/// nominal level a.
inline Interval ci_reg_c_fixed(const ConvexRegLevel& lv, double alpha) {
  check_alpha(alpha);
  if (std::isnan(lv.delta_l)) throw DomainError("ci_reg_c_fixed: T_{j+1} unavailable at j = J");
  const double z = z_upper(alpha / 12.0);
  return Interval::from_endpoints(lv.delta_l - z * lv.tau, lv.delta_bar + z * lv.sigma);
}

struct RegConvexResult {
  Interval ci;
  RegConvexStats stats;
};

inline RegConvexResult ci_reg_c(const DyadicBlocks& b, double alpha) {
  check_alpha(alpha);
  RegConvexResult r{{}, reg_convex_stats(b)};
  r.stats.choice = select_j_reg_c(r.stats, alpha);
  r.ci = ci_reg_c_fixed(r.stats.level(r.stats.choice.j), alpha);
  return r;
}

inline RegConvexResult ci_reg_c(const RegressionSample& s, double alpha) {
  return ci_reg_c(blocks_from_sample(s), alpha);
}

// ----------------------------------------------------------- exact sums

/// Slacks of the convex regression bias inequalities at level j:
///   [0] E T_{j+1} - 2 E T_j               (j >= 2; +inf otherwise)
///   [1] Bias(delta_bar_j)
///   [2] (2^{j-1}+1)/(2^j+1) Bias(delta_bar_{j+1}) - Bias(delta_bar_j)
///   [3] -Bias(delta_j^L)
struct Lemma2Slack {
  double t_doubling = std::numeric_limits<double>::infinity();
  double bias_nonneg = 0.0;
  double bias_growth = 0.0;
  double lower_bias = 0.0;

  double min() const { return std::min({t_doubling, bias_nonneg, bias_growth, lower_bias}); }
};

inline Lemma2Slack lemma2_slack(const FunctionSpec& f, long n, int j) {
  if (!f.classify().convex) throw DomainError("lemma2_check: f is not convex");
  const RegressionBlockSampler sampler(f, n, 0.0);
  const DyadicBlocks& m = sampler.mean();
  if (j < 1 || j + 1 > m.big_j) throw DomainError("lemma2_check: need 1 <= j < J");
  const double f0 = f.evaluate(0.0);
  auto bias = [&](int k) { return reg_delta_bar(m, k) - f0; };
  Lemma2Slack s;
  if (j >= 2) {
    const double t_j = reg_delta_bar(m, j) - reg_delta_bar(m, j - 1);
    const double t_next = reg_delta_bar(m, j + 1) - reg_delta_bar(m, j);
    s.t_doubling = t_next - 2.0 * t_j;
  }
  s.bias_nonneg = bias(j);
  const double ratio = (std::ldexp(1.0, j - 1) + 1.0) / (std::ldexp(1.0, j) + 1.0);
  s.bias_growth = ratio * bias(j + 1) - bias(j);
  s.lower_bias = -(estimators_reg_c(m, j).delta_l - f0);
  return s;
}

inline bool lemma2_check(const FunctionSpec& f, long n, int j, double tol = 1e-10) {
  return lemma2_slack(f, n, j).min() >= -tol;
}

// --------------------------------------------------------- noise level

/// First-difference estimate sqrt(sum (y_{i+1} - y_i)^2 / (2 (N - 1))).
inline double estimate_sigma(const std::vector<double>& y) {
  if (y.size() < 17) throw DomainError("estimate_sigma: degenerate sample (need n >= 8)");
  double acc = 0.0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    const double d = y[i] - y[i - 1];
    acc += d * d;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(y.size() - 1)));
}

// ------------------------------------------------------------------ CSV

inline void write_regression_csv(std::ostream& os, const RegressionSample& s) {
  os << "i,x,y\n";
  char buf[96];
  for (long i = -s.n; i <= s.n; ++i) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", i, RegressionSample::design(i, s.n), s.at(i));
    os << buf;
  }
}

/// Parses an "i,x,y" table with i running over -n..n; leading '#' lines are
/// skipped. The noise level is never inferred here; it comes from the caller.
inline RegressionSample read_regression_csv(std::istream& is, double sigma) {
  auto trim = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    return s;
  };
  std::string line;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw InputError("empty input: expected header 'i,x,y'");
  if (trim(line) != "i,x,y") throw InputError("bad header '" + line + "', expected 'i,x,y'");
  std::vector<long> idx;
  std::vector<double> ys;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw InputError("line " + std::to_string(lineno) + ": expected 3 fields");
    }
    try {
      std::size_t pos = 0;
      const long i = std::stol(trim(a), &pos);
      if (pos != trim(a).size()) throw std::invalid_argument(a);
      (void)std::stod(trim(b));
      const double y = std::stod(trim(c), &pos);
      if (pos != trim(c).size() || !std::isfinite(y)) throw std::invalid_argument(c);
      idx.push_back(i);
      ys.push_back(y);
    } catch (const std::logic_error&) {
      throw InputError("line " + std::to_string(lineno) + ": non-numeric field");
    }
  }
  if (ys.empty()) throw InputError("no data rows");
  if (ys.size() % 2 == 0) throw InputError("expected 2n+1 rows");
  const long n = static_cast<long>(ys.size() / 2);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] != static_cast<long>(r) - n) throw InputError("indices must run -n..n in order");
  }
  if (n < 4) throw InputError("need n >= 4");
  if (!(sigma >= 0.0)) throw InputError("sigma must be >= 0");
  return RegressionSample{n, std::move(ys), sigma};
}

}  // namespace shapeci
