#include <gtest/gtest.h>

#include <random>

#include <boost/math/distributions/normal.hpp>

#include "shapeci/error.hpp"
#include "shapeci/monotone_wn.hpp"
#include "support.hpp"

using namespace shapeci;

namespace {

MonotoneWnStats stats_with_xi(const std::vector<double>& xi, long n) {
  MonotoneWnStats s;
  s.n = n;
  int j = 2;
  for (double x : xi) {
    s.levels.push_back({j, 0.0, 0.0, x, sigma_j(j, n)});
    ++j;
  }
  return s;
}

std::vector<FunctionSpec> monotone_family() {
  std::vector<FunctionSpec> fs = {FunctionSpec::linear(0.0),
                                  FunctionSpec::linear(1.0),
                                  FunctionSpec::linear(5.0),
                                  FunctionSpec::linear_plus_power(1.0, 2.0, 1.0),
                                  FunctionSpec::linear_plus_power(1.0, 2.0, 2.0),
                                  FunctionSpec::odd_power(1.0, 3.0),
                                  FunctionSpec::odd_power(1.0, 1.0 / 3.0)};
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 100; ++i) fs.push_back(testing_support::random_monotone_pwl(gen));
  return fs;
}

}  // namespace

TEST(SigmaJ, Formula) {
  EXPECT_NEAR(sigma_j(2, 1024), 0.0441942, 1e-7);
  EXPECT_DOUBLE_EQ(sigma_j(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(sigma_j(3, 1024), 0.0625);
}

TEST(EstimatorsM, NoiseFreeLinear) {
  const auto f = FunctionSpec::linear(1.0);
  const DyadicPath m = mean_path(f, 1024, required_abscissae(Procedure::MonotoneWN, 0.0, 6));
  for (int j = 2; j <= 6; ++j) {
    const MonotoneLevel lv = estimators_m(m, 0.0, j);
    EXPECT_NEAR(lv.xi, 3.0 * std::ldexp(1.0, -j - 1), 1e-14);
    EXPECT_NEAR(lv.delta_r, std::ldexp(1.0, -j - 1), 1e-14);
    EXPECT_NEAR(lv.delta_l, -std::ldexp(1.0, -j - 1), 1e-14);
    EXPECT_NEAR(lv.xi, expected_xi(f, 0.0, j), 1e-14);
  }
  EXPECT_NEAR(estimators_m(m, 0.0, 3).xi, 3.0 / 16.0, 1e-14);
}

TEST(EstimatorsM, MonteCarloMeanAndSpread) {
  constexpr int kReps = 100000;
  constexpr long n = 256;
  const auto f = FunctionSpec::linear(1.0);
  const WhiteNoiseSampler sampler(f, n, required_abscissae(Procedure::MonotoneWN, 0.0, 3));
  double s_xi = 0, s_xi2 = 0, s_r2 = 0, s_l2 = 0, s_r = 0, s_l = 0;
  for (int r = 0; r < kReps; ++r) {
    const MonotoneLevel lv = estimators_m(sampler.sample({3, static_cast<std::uint64_t>(r)}), 0.0, 3);
    s_xi += lv.xi;
    s_xi2 += lv.xi * lv.xi;
    s_r += lv.delta_r;
    s_r2 += lv.delta_r * lv.delta_r;
    s_l += lv.delta_l;
    s_l2 += lv.delta_l * lv.delta_l;
  }
  const double s = sigma_j(3, n);
  auto sd = [&](double a, double a2) { return std::sqrt(a2 / kReps - (a / kReps) * (a / kReps)); };
  EXPECT_NEAR(s_xi / kReps, 3.0 / 16.0, 3.0 * s / std::sqrt(kReps));
  // sd of a sample sd is about sd / sqrt(2R).
  EXPECT_NEAR(sd(s_xi, s_xi2), s, 3.0 * s / std::sqrt(2.0 * kReps));
  EXPECT_NEAR(sd(s_r, s_r2), std::sqrt(2.0) * s, 3.0 * std::sqrt(2.0) * s / std::sqrt(2.0 * kReps));
  EXPECT_NEAR(sd(s_l, s_l2), std::sqrt(2.0) * s, 3.0 * std::sqrt(2.0) * s / std::sqrt(2.0 * kReps));
}

TEST(CiMFixed, Examples) {
  const Interval a = ci_m_fixed(MonotoneLevel{2, 0.6, 0.5, 0.0, 0.05}, 0.05);
  const double half = boost::math::quantile(boost::math::normal_distribution<double>(), 0.975) * std::sqrt(2.0) * 0.05;
  EXPECT_NEAR(a.lower, 0.5 - half, 1e-12);
  EXPECT_NEAR(a.upper, 0.6 + half, 1e-12);
  EXPECT_NEAR(a.length(), 0.1 + 2.0 * half, 1e-12);
  // Published six-digit figures carry rounding slips in the last place.
  EXPECT_NEAR(a.lower / 0.361413, 1.0, 1e-4);
  EXPECT_NEAR(a.upper / 0.738587, 1.0, 1e-4);
  EXPECT_NEAR(a.length() / 0.377175, 1.0, 1e-4);
  const Interval b = ci_m_fixed(MonotoneLevel{2, 0.1, 0.6, 0.0, 0.05}, 0.05);
  EXPECT_TRUE(b.empty);
  EXPECT_EQ(b.length(), 0.0);
  EXPECT_FALSE(b.contains(0.3));
  const double s = 0.031;
  const Interval c = ci_m_fixed(MonotoneLevel{4, 1.7, 1.7, 0.0, s}, 0.1);
  EXPECT_NEAR(c.length(), 2.0 * std::sqrt(2.0) * z_upper(0.05) * s, 1e-14);
}

TEST(SelectJM, Rules) {
  EXPECT_EQ(select_j_m(stats_with_xi({0, 0, 0, 0}, 1024), 0.05).j, 2);
  const auto s = stats_with_xi({10.0, 0.0, 0.0}, 1024);
  EXPECT_EQ(select_j_m(s, 0.05).j, 3);
  const auto none = select_j_m(stats_with_xi({10, 10, 10}, 1024), 0.05);
  EXPECT_EQ(none.j, 4);
  EXPECT_TRUE(none.truncated);
}

// E xi_j = 3 * 2^{-j-1} for Linear k=1. At n=1024 the (3/2) z sigma_j
// threshold is first met at j=4: 3/16 > 0.1542 at j=3, 3/32 <= 0.2181 at j=4.
TEST(SelectJM, NoiseFreeLinear) {
  const DyadicPath m = mean_path(FunctionSpec::linear(1.0), 1024, required_abscissae(Procedure::MonotoneWN, 0.0, 10));
  const auto r = ci_m_adaptive(m, 0.0, 0.05);
  EXPECT_EQ(r.stats.choice.j, 4);
  EXPECT_FALSE(r.stats.choice.truncated);
  EXPECT_TRUE(r.ci.contains(0.0));
}

TEST(JStarM, Examples) {
  EXPECT_EQ(j_star_m(FunctionSpec::linear(0.0), 1024, 0.05).j, 2);
  // 3/16 > z sigma_3 = 0.1028; 3/32 <= z sigma_4 = 0.1454.
  const JStar js = j_star_m(FunctionSpec::linear(1.0), 1024, 0.05);
  EXPECT_EQ(js.j, 4);
  EXPECT_DOUBLE_EQ(js.sigma, sigma_j(4, 1024));
}

TEST(JStarM, DecreasesSlowlyWithN) {
  int prev = j_star_m(FunctionSpec::linear(1.0), 1L << 8, 0.05).j;
  for (int e = 10; e <= 24; e += 2) {
    const int j = j_star_m(FunctionSpec::linear(1.0), 1L << e, 0.05).j;
    EXPECT_GE(j, prev);
    EXPECT_LE(j, prev + 1);
    prev = j;
  }
}

TEST(MonotoneBias, SignsHold) {
  for (const auto& f : monotone_family()) {
    for (double t0 : {0.0, 0.17, -0.2}) {
      const double f0 = f.evaluate(t0);
      for (int j = min_level_monotone(t0); j <= 12; ++j) {
        const double er = expected_delta_r(f, t0, j);
        const double el = expected_delta_l(f, t0, j);
        EXPECT_GE(er - f0, -1e-12) << f.name() << " j=" << j;
        EXPECT_LE(el - f0, 1e-12) << f.name() << " j=" << j;
        EXPECT_LE(er - el, 2.0 * expected_xi(f, t0, j) + 1e-12) << f.name() << " j=" << j;
      }
    }
  }
}

// Increments read by each statistic, as intervals of t. Independence of
// Gaussian white-noise increments reduces to zero overlap length.
namespace {
using Band = std::pair<double, double>;
std::vector<Band> delta_bands(int j) { return {{-dyadic(j), 0.0}, {0.0, dyadic(j)}}; }
std::vector<Band> xi_bands(int j) { return {{-2 * dyadic(j), -dyadic(j)}, {dyadic(j), 2 * dyadic(j)}}; }
double overlap(const std::vector<Band>& a, const std::vector<Band>& b) {
  double total = 0.0;
  for (const auto& x : a)
    for (const auto& y : b) total += std::max(0.0, std::min(x.second, y.second) - std::max(x.first, y.first));
  return total;
}
}  // namespace

TEST(MonotoneIndependence, DisjointIncrements) {
  for (int j = 2; j <= 14; ++j) {
    for (int k = 2; k <= 14; ++k) {
      if (k != j) { EXPECT_EQ(overlap(xi_bands(j), xi_bands(k)), 0.0) << j << "," << k; }
      if (k <= j) { EXPECT_EQ(overlap(delta_bands(j), xi_bands(k)), 0.0) << j << "," << k; }
    }
    EXPECT_GT(overlap(delta_bands(j), xi_bands(j + 1)), 0.0);
  }
}

TEST(CiMAdaptive, CoversZeroFunction) {
  constexpr int kReps = 10000;
  constexpr long n = 4096;
  const WhiteNoiseSampler sampler(FunctionSpec::linear(0.0), n,
                                  required_abscissae(Procedure::MonotoneWN, 0.0, default_j_max(n)));
  int covered = 0;
  for (int r = 0; r < kReps; ++r) {
    covered += ci_m_adaptive(sampler.sample({77, static_cast<std::uint64_t>(r)}), 0.0, 0.05).ci.contains(0.0);
  }
  EXPECT_GE(covered / static_cast<double>(kReps), 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / kReps));
}

TEST(CiMFixed, CoverageEachLevel) {
  constexpr int kReps = 4000;
  constexpr long n = 1024;
  const auto f = FunctionSpec::odd_power(1.0, 3.0);
  const WhiteNoiseSampler sampler(f, n, required_abscissae(Procedure::MonotoneWN, 0.0, 8));
  for (int j = 2; j <= 8; ++j) {
    int covered = 0;
    for (int r = 0; r < kReps; ++r) {
      covered += ci_m_fixed(estimators_m(sampler.sample({5, static_cast<std::uint64_t>(r)}), 0.0, j), 0.05).contains(0.0);
    }
    EXPECT_GE(covered / static_cast<double>(kReps), 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / kReps)) << "j=" << j;
  }
}

TEST(MonotoneWn, RejectsBadInput) {
  const DyadicPath m = mean_path(FunctionSpec::linear(1.0), 64, required_abscissae(Procedure::MonotoneWN, 0.0, 4));
  EXPECT_THROW(estimators_m(m, 0.0, 1), DomainError);
  EXPECT_THROW(estimators_m(m, 0.0, 5), DomainError);
  EXPECT_THROW(ci_m_adaptive(m, 0.0, 0.0), DomainError);
  EXPECT_THROW(ci_m_adaptive(m, 0.0, 0.6), DomainError);
}
