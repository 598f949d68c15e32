#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "shapeci/function_model.hpp"

namespace testing_support {

inline std::vector<double> random_knots(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_real_distribution<double> u(-0.49, 0.49);
  std::vector<double> k{-0.5, 0.5};
  for (int i = count(gen); i > 0; --i) k.push_back(u(gen));
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

/// Nondecreasing piecewise-linear function with random knots and jumps.
inline shapeci::FunctionSpec random_monotone_pwl(std::mt19937_64& gen) {
  std::exponential_distribution<double> step(1.0);
  std::normal_distribution<double> level(0.0, 1.0);
  const auto knots = random_knots(gen);
  std::vector<double> v{level(gen)};
  for (std::size_t i = 1; i < knots.size(); ++i) v.push_back(v.back() + step(gen));
  return shapeci::FunctionSpec::piecewise_linear(knots, v);
}

/// Convex piecewise-linear function: slopes sorted ascending.
inline shapeci::FunctionSpec random_convex_pwl(std::mt19937_64& gen) {
  std::normal_distribution<double> z(0.0, 3.0);
  const auto knots = random_knots(gen);
  std::vector<double> slopes(knots.size() - 1);
  for (double& s : slopes) s = z(gen);
  std::sort(slopes.begin(), slopes.end());
  std::vector<double> v{z(gen)};
  for (std::size_t i = 0; i < slopes.size(); ++i) v.push_back(v.back() + slopes[i] * (knots[i + 1] - knots[i]));
  return shapeci::FunctionSpec::piecewise_linear(knots, v);
}

}  // namespace testing_support
