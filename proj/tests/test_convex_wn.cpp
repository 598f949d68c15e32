#include <gtest/gtest.h>

#include <random>

#include "shapeci/convex_wn.hpp"
#include "shapeci/error.hpp"
#include "support.hpp"

using namespace shapeci;

namespace {

ConvexWnStats stats_with_t(const std::vector<double>& t, long n) {
  ConvexWnStats s;
  s.n = n;
  int j = 1;
  for (double x : t) {
    s.levels.push_back({j, 0.0, 0.0, 0.0, x, sigma_j(j, n)});
    ++j;
  }
  return s;
}

std::vector<FunctionSpec> convex_family() {
  std::vector<FunctionSpec> fs = {FunctionSpec::linear(0.0), FunctionSpec::linear(1.0),
                                  FunctionSpec::linear(5.0), FunctionSpec::linear_plus_power(1.0, 2.0, 1.0),
                                  FunctionSpec::linear_plus_power(1.0, 2.0, 2.0), FunctionSpec::square()};
  std::mt19937_64 gen(4048);
  for (int i = 0; i < 100; ++i) fs.push_back(testing_support::random_convex_pwl(gen));
  return fs;
}

double coverage_c(const FunctionSpec& f, double t0, long n, int reps, std::uint64_t seed) {
  const WhiteNoiseSampler sampler(f, n, required_abscissae(Procedure::ConvexWN, t0, default_j_max(n)));
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    covered += ci_c_adaptive(sampler.sample({seed, static_cast<std::uint64_t>(r)}), t0, 0.05).ci.contains(f.evaluate(t0));
  }
  return covered / static_cast<double>(reps);
}

}  // namespace

TEST(EstimatorsC, NoiseFreeLinearIsUnbiased) {
  for (double k : {0.0, 1.0, 5.0}) {
    const DyadicPath m = mean_path(FunctionSpec::linear(k), 1024, required_abscissae(Procedure::ConvexWN, 0.0, 8));
    for (int j = 1; j <= 8; ++j) {
      const ConvexLevel lv = estimators_c(m, 0.0, j);
      EXPECT_NEAR(lv.delta, 0.0, 1e-14);
      EXPECT_NEAR(lv.t, 0.0, 1e-14);
      EXPECT_NEAR(lv.delta_tilde, 0.0, 1e-14);
    }
  }
}

TEST(EstimatorsC, NoiseFreeSquare) {
  const DyadicPath m = mean_path(FunctionSpec::square(), 1024, required_abscissae(Procedure::ConvexWN, 0.0, 6));
  for (int j = 1; j <= 6; ++j) {
    const double h = dyadic(j);
    const ConvexLevel lv = estimators_c(m, 0.0, j);
    EXPECT_NEAR(lv.delta, h * h / 3.0, 1e-15);
    EXPECT_NEAR(lv.t, h * h / 4.0, 1e-15);
    EXPECT_NEAR(lv.delta_tilde, -h * h / 6.0, 1e-15);
  }
}

TEST(CiCFixed, SymmetricLength) {
  const double s = 0.04;
  const Interval ci = ci_c_fixed(ConvexLevel{2, 0.3, 0.3, 0.3, 0.0, s}, 0.05);
  const double z = z_upper(0.025);
  EXPECT_NEAR(ci.lower, 0.3 - z * std::sqrt(5.0) * s, 1e-14);
  EXPECT_NEAR(ci.upper, 0.3 + z * std::sqrt(2.0) * s, 1e-14);
  EXPECT_NEAR(ci.length(), (std::sqrt(5.0) + std::sqrt(2.0)) * z * s, 1e-14);
}

// The endpoints cross when delta_{j+1} - delta_j exceeds (sqrt5 + sqrt2) z sigma_j.
TEST(CiCFixed, InvertedIsEmpty) {
  const double d = 0.0, d1 = 1.0;
  const Interval ci = ci_c_fixed(ConvexLevel{2, d, d1, 2 * d1 - d, d - d1, 0.01}, 0.05);
  EXPECT_TRUE(ci.empty);
  EXPECT_EQ(ci.length(), 0.0);
}

TEST(SelectJC, Rules) {
  EXPECT_EQ(select_j_c(stats_with_t({0.0, -1.0, 0.0}, 1024), 0.05).j, 1);
  const double tie = z_upper(0.05) * sigma_j(1, 1024);
  EXPECT_EQ(select_j_c(stats_with_t({tie, 10.0}, 1024), 0.05).j, 1);
  EXPECT_EQ(select_j_c(stats_with_t({std::nextafter(tie, 1.0), 0.0}, 1024), 0.05).j, 2);
  const auto none = select_j_c(stats_with_t({5, 5, 5}, 1024), 0.05);
  EXPECT_EQ(none.j, 3);
  EXPECT_TRUE(none.truncated);
}

// E T_1 = 1/16 > z sigma_1 = 0.0514; E T_2 = 1/64 <= z sigma_2 = 0.0727.
TEST(SelectJC, NoiseFreeSquare) {
  const DyadicPath m = mean_path(FunctionSpec::square(), 1024, required_abscissae(Procedure::ConvexWN, 0.0, 10));
  const auto r = ci_c_adaptive(m, 0.0, 0.05);
  EXPECT_EQ(r.stats.choice.j, 2);
  EXPECT_TRUE(r.ci.contains(0.0));
}

TEST(SelectJC, LargerAlphaNeverSelectsCoarser) {
  const long n = 2048;
  const WhiteNoiseSampler sampler(FunctionSpec::square(), n, required_abscissae(Procedure::ConvexWN, 0.0, 11));
  for (int r = 0; r < 500; ++r) {
    const auto stats = convex_stats(sampler.sample({8, static_cast<std::uint64_t>(r)}), 0.0, 11);
    int prev = 0;
    for (double a : {0.001, 0.01, 0.05, 0.1, 0.2, 0.4}) {
      const int j = select_j_c(stats, a).j;
      EXPECT_GE(j, prev);
      prev = j;
    }
  }
}

TEST(JStarC, Examples) {
  EXPECT_EQ(j_star_c(FunctionSpec::linear(3.0), 1024, 0.05).j, 1);
  const JStar js = j_star_c(FunctionSpec::square(), 1024, 0.05);
  EXPECT_EQ(js.j, 2);
  EXPECT_DOUBLE_EQ(js.sigma, sigma_j(2, 1024));
}

TEST(Lemma1, HoldsOnConvexFamily) {
  for (const auto& f : convex_family()) {
    for (int j = 1; j <= 6; ++j) {
      EXPECT_TRUE(lemma1_check(f, j)) << f.name() << " j=" << j << " slack=" << lemma1_slack(f, j).min();
    }
  }
}

TEST(Lemma1, EqualityForLinear) {
  const Lemma1Slack s = lemma1_slack(FunctionSpec::linear(2.0), 3);
  EXPECT_NEAR(s.bias_nonneg, 0.0, 1e-15);
  EXPECT_NEAR(s.bias_halving, 0.0, 1e-15);
  EXPECT_NEAR(s.second_difference, 0.0, 1e-15);
}

TEST(Lemma1, FailsForConcave) {
  const auto concave = FunctionSpec::piecewise_linear({-0.5, 0.0, 0.5}, {-1.0, 0.0, -1.0});
  EXPECT_THROW(lemma1_check(concave, 2), DomainError);
}

TEST(CiCAdaptive, CoversSquare) {
  EXPECT_GE(coverage_c(FunctionSpec::square(), 0.0, 4096, 10000, 31), 0.943);
}

TEST(CiCAdaptive, CoversOffCentre) {
  EXPECT_GE(coverage_c(FunctionSpec::square(), 0.2, 4096, 4000, 32), 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / 4000));
  EXPECT_GE(coverage_c(FunctionSpec::linear(1.0), -0.3, 4096, 4000, 33), 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / 4000));
}
