#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/rng.hpp"

namespace shapeci {

/// Which white-noise procedure an abscissa set is built for.
enum class Procedure { MonotoneWN, ConvexWN };

/// Observation Y of dY = f dt + n^{-1/2} dW at a finite sorted set of points.
/// Y is anchored at 0 (Y(0) = 0 when 0 is an abscissa, otherwise at the first
/// abscissa); only differences of Y carry information.
struct DyadicPath {
  long n = 0;
  std::vector<double> abscissae;
  std::vector<double> values;

  /// Y at an abscissa of the path; throws if t was not sampled.
  double at(double t) const {
    auto it = std::lower_bound(abscissae.begin(), abscissae.end(), t - kLookupTol);
    if (it == abscissae.end() || std::fabs(*it - t) > kLookupTol) {
      throw DomainError("path has no abscissa at t = " + std::to_string(t));
    }
    return values[static_cast<std::size_t>(it - abscissae.begin())];
  }

  bool has(double t) const {
    auto it = std::lower_bound(abscissae.begin(), abscissae.end(), t - kLookupTol);
    return it != abscissae.end() && std::fabs(*it - t) <= kLookupTol;
  }

  static constexpr double kLookupTol = 1e-14;
};

namespace detail {

inline void validate_abscissae(const std::vector<double>& abscissae) {
  if (abscissae.empty()) throw DomainError("abscissae must be non-empty");
  for (std::size_t i = 0; i < abscissae.size(); ++i) {
    const double t = abscissae[i];
    if (!(t >= -kHalf && t <= kHalf)) throw DomainError("abscissa outside [-1/2, 1/2]");
    if (i > 0 && !(t > abscissae[i - 1])) throw DomainError("abscissae must be sorted and distinct");
  }
}

inline std::size_t anchor_index(const std::vector<double>& abscissae) {
  auto it = std::lower_bound(abscissae.begin(), abscissae.end(), 0.0);
  if (it != abscissae.end() && *it == 0.0) return static_cast<std::size_t>(it - abscissae.begin());
  return 0;
}

}  // namespace detail

/// Draws exact-law paths of Y at a fixed abscissa set. The drift integrals are
/// computed once; each draw costs one normal per increment.
class WhiteNoiseSampler {
 public:
  WhiteNoiseSampler(const FunctionSpec& f, long n, std::vector<double> abscissae)
      : n_(n), abscissae_(std::move(abscissae)) {
    if (n < 4) throw DomainError("sample_path: n must be >= 4");
    detail::validate_abscissae(abscissae_);
    anchor_ = detail::anchor_index(abscissae_);
    drift_.resize(abscissae_.size() - 1);
    scale_.resize(abscissae_.size() - 1);
    for (std::size_t i = 0; i + 1 < abscissae_.size(); ++i) {
      drift_[i] = f.integrate(abscissae_[i], abscissae_[i + 1]);
      scale_[i] = std::sqrt((abscissae_[i + 1] - abscissae_[i]) / static_cast<double>(n));
    }
  }

  DyadicPath sample(SeedSpec seed) const { return build(&seed); }

  /// Path of E Y: drift only, no noise.
  DyadicPath mean() const { return build(nullptr); }

  const std::vector<double>& abscissae() const { return abscissae_; }

 private:
  DyadicPath build(const SeedSpec* seed) const {
    DyadicPath p{n_, abscissae_, std::vector<double>(abscissae_.size(), 0.0)};
    const NormalStream z = seed ? NormalStream(*seed, StreamTag::WhiteNoise)
                                : NormalStream(SeedSpec{}, StreamTag::WhiteNoise);
    auto inc = [&](std::size_t i) { return drift_[i] + (seed ? scale_[i] * z(i) : 0.0); };
    for (std::size_t i = anchor_ + 1; i < abscissae_.size(); ++i) {
      p.values[i] = p.values[i - 1] + inc(i - 1);
    }
    for (std::size_t i = anchor_; i-- > 0;) {
      p.values[i] = p.values[i + 1] - inc(i);
    }
    return p;
  }

  long n_;
  std::vector<double> abscissae_;
  std::size_t anchor_ = 0;
  std::vector<double> drift_;
  std::vector<double> scale_;
};

/// Y at the given abscissae: increments are integrate(f) + N(0, dt / n), independent.
inline DyadicPath sample_path(const FunctionSpec& f, long n, std::vector<double> abscissae,
                              SeedSpec seed) {
  return WhiteNoiseSampler(f, n, std::move(abscissae)).sample(seed);
}

/// Noise-free path E Y, so linear statistics of it are exact expectations.
inline DyadicPath mean_path(const FunctionSpec& f, long n, std::vector<double> abscissae) {
  return WhiteNoiseSampler(f, n, std::move(abscissae)).mean();
}

/// Rejects points where no two-sided dyadic window fits.
inline void check_interior(double t0) {
  if (!(std::fabs(t0) < kHalf)) {
    throw BoundaryError(
        "t0 = " + std::to_string(t0) +
        " is on the boundary: an honest interval for f(+-1/2) must be unbounded");
  }
}

/// Smallest level j with t0 + 2^{-j+1} inside the domain: j >= -log2(1/4 - |t0|/2).
inline int min_level_monotone(double t0) {
  check_interior(t0);
  const double room = 0.25 - std::fabs(t0) / 2.0;
  return std::max(2, static_cast<int>(std::ceil(-std::log2(room) - 1e-12)));
}

/// Smallest level j with t0 +- 2^{-j} inside the domain: j >= -log2(1/2 - |t0|).
inline int min_level_convex(double t0) {
  check_interior(t0);
  const double room = 0.5 - std::fabs(t0);
  return std::max(1, static_cast<int>(std::ceil(-std::log2(room) - 1e-12)));
}

inline double dyadic(int j) { return std::ldexp(1.0, -j); }

/// Default level cap: floor(log2 n).
inline int default_j_max(long n) {
  if (n < 1) throw DomainError("n must be positive");
  int j = 0;
  while ((2L << j) <= n) ++j;
  return j;
}

/// Exactly the points the estimators of a procedure read for levels up to j_max.
inline std::vector<double> required_abscissae(Procedure proc, double t0, int j_max) {
  const int j_min = proc == Procedure::MonotoneWN ? min_level_monotone(t0) : min_level_convex(t0);
  if (j_max < j_min) {
    throw DomainError("j_max = " + std::to_string(j_max) + " is below the smallest admissible level " +
                      std::to_string(j_min));
  }
  std::vector<double> pts{t0};
  auto add = [&](double h) {
    pts.push_back(t0 + h);
    pts.push_back(t0 - h);
  };
  if (proc == Procedure::MonotoneWN) {
    for (int j = j_min; j <= j_max; ++j) {
      add(dyadic(j));
      add(dyadic(j - 1));
    }
  } else {
    // delta_{j+1} is read alongside delta_j.
    for (int j = j_min; j <= j_max + 1; ++j) add(dyadic(j));
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::fabs(a - b) <= DyadicPath::kLookupTol; }),
            pts.end());
  for (double& p : pts) p = std::clamp(p, -kHalf, kHalf);
  return pts;
}

}  // namespace shapeci
