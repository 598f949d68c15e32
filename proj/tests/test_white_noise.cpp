#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "shapeci/error.hpp"
#include "shapeci/white_noise.hpp"

using namespace shapeci;

namespace {

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

void expect_points(const std::vector<double>& got, const std::vector<double>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_DOUBLE_EQ(got[i], want[i]);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, k = 0;
  double d = 0.0;
  while (i < a.size() && k < b.size()) {
    const double x = std::min(a[i], b[k]);
    while (i < a.size() && a[i] <= x) ++i;
    while (k < b.size() && b[k] <= x) ++k;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(k) / b.size()));
  }
  return d;
}

}  // namespace

TEST(RequiredAbscissae, MonotoneAtOrigin) {
  expect_points(required_abscissae(Procedure::MonotoneWN, 0.0, 4),
                sorted({0.0, 1.0 / 16, -1.0 / 16, 0.125, -0.125, 0.25, -0.25, 0.5, -0.5}));
}

TEST(RequiredAbscissae, ConvexAtOrigin) {
  expect_points(required_abscissae(Procedure::ConvexWN, 0.0, 3),
                sorted({0.0, 1.0 / 16, -1.0 / 16, 0.125, -0.125, 0.25, -0.25, 0.5, -0.5}));
}

TEST(RequiredAbscissae, OffCentreStaysInDomain) {
  for (double t0 : {0.25, -0.3, 0.49}) {
    for (Procedure proc : {Procedure::MonotoneWN, Procedure::ConvexWN}) {
      const auto pts = required_abscissae(proc, t0, 10);
      EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));
      EXPECT_GE(pts.front(), -0.5);
      EXPECT_LE(pts.back(), 0.5);
      EXPECT_NE(std::find(pts.begin(), pts.end(), t0), pts.end());
    }
  }
}

TEST(RequiredAbscissae, LevelFloors) {
  EXPECT_EQ(min_level_monotone(0.0), 2);
  EXPECT_EQ(min_level_monotone(0.25), 3);
  EXPECT_EQ(min_level_convex(0.0), 1);
  EXPECT_EQ(min_level_convex(0.25), 2);
  EXPECT_THROW(required_abscissae(Procedure::MonotoneWN, 0.0, 1), DomainError);
}

TEST(RequiredAbscissae, BoundaryRejected) {
  EXPECT_THROW(required_abscissae(Procedure::MonotoneWN, 0.5, 6), BoundaryError);
  EXPECT_THROW(required_abscissae(Procedure::ConvexWN, -0.5, 6), BoundaryError);
}

TEST(DefaultJMax, FloorLog2) {
  EXPECT_EQ(default_j_max(4), 2);
  EXPECT_EQ(default_j_max(1023), 9);
  EXPECT_EQ(default_j_max(1024), 10);
  EXPECT_EQ(default_j_max(4096), 12);
}

TEST(SamplePath, MeanPathIsDriftIntegral) {
  const auto f = FunctionSpec::linear_plus_power(1.0, 2.0, 2.0);
  const auto pts = required_abscissae(Procedure::ConvexWN, 0.0, 6);
  const DyadicPath m = mean_path(f, 1024, pts);
  for (double t : pts) {
    const double want = t >= 0.0 ? f.integrate(0.0, t) : -f.integrate(t, 0.0);
    EXPECT_NEAR(m.at(t) - m.at(0.0), want, 1e-15) << "t=" << t;
  }
}

TEST(SamplePath, Reproducible) {
  const auto pts = required_abscissae(Procedure::MonotoneWN, 0.0, 8);
  const auto a = sample_path(FunctionSpec::square(), 512, pts, {5, 17});
  const auto b = sample_path(FunctionSpec::square(), 512, pts, {5, 17});
  const auto c = sample_path(FunctionSpec::square(), 512, pts, {5, 18});
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
}

TEST(SamplePath, IncrementVarianceMatchesLaw) {
  constexpr int kReps = 100000;
  constexpr long n = 1024;
  const WhiteNoiseSampler sampler(FunctionSpec::linear(1.0), n, {0.0, 0.25});
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < kReps; ++r) {
    const DyadicPath p = sampler.sample({99, static_cast<std::uint64_t>(r)});
    const double d = p.at(0.25) - p.at(0.0);
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / kReps;
  const double var = (sum_sq - kReps * mean * mean) / (kReps - 1);
  const double want = 0.25 / n;
  EXPECT_NEAR(mean, 1.0 / 32.0, 3.0 * std::sqrt(want / kReps));
  EXPECT_NEAR(var, want, 3.0 * want * std::sqrt(2.0 / (kReps - 1)));
}

TEST(SamplePath, RefinementKeepsMarginalLaw) {
  constexpr int kReps = 10000;
  const auto f = FunctionSpec::odd_power(1.0, 3.0);
  const WhiteNoiseSampler coarse(f, 256, {-0.5, 0.0, 0.25, 0.5});
  const WhiteNoiseSampler fine(f, 256, required_abscissae(Procedure::MonotoneWN, 0.0, 8));
  std::vector<double> a(kReps), b(kReps);
  for (int r = 0; r < kReps; ++r) {
    const auto pa = coarse.sample({1, static_cast<std::uint64_t>(r)});
    const auto pb = fine.sample({2, static_cast<std::uint64_t>(r)});
    a[r] = pa.at(0.25) - pa.at(-0.5);
    b[r] = pb.at(0.25) - pb.at(-0.5);
  }
  // 1% critical value for equal sample sizes.
  EXPECT_LT(ks_two_sample(a, b), 1.628 * std::sqrt(2.0 / kReps));
}

TEST(SamplePath, RejectsBadInput) {
  EXPECT_THROW(sample_path(FunctionSpec::square(), 2, {0.0, 0.25}, {}), DomainError);
  EXPECT_THROW(sample_path(FunctionSpec::square(), 64, {0.25, 0.0}, {}), DomainError);
  EXPECT_THROW(sample_path(FunctionSpec::square(), 64, {0.0, 0.75}, {}), DomainError);
  const auto p = mean_path(FunctionSpec::square(), 64, {0.0, 0.25});
  EXPECT_THROW(p.at(0.125), DomainError);
}
