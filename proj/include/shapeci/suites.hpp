#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "shapeci/function_model.hpp"
#include "shapeci/harness.hpp"
#include "shapeci/modulus.hpp"

namespace shapeci {

/// The standard test functions.
inline std::vector<FunctionSpec> test_functions() {
  return {FunctionSpec::linear(0.0),
          FunctionSpec::linear(1.0),
          FunctionSpec::linear(5.0),
          FunctionSpec::linear_plus_power(1.0, 2.0, 1.0),
          FunctionSpec::linear_plus_power(1.0, 2.0, 2.0),
          FunctionSpec::odd_power(1.0, 3.0),
          FunctionSpec::odd_power(1.0, 1.0 / 3.0),
          FunctionSpec::square()};
}

struct MatrixCell {
  FunctionSpec f;
  ShapeClass cls;
};

/// Every test function paired with each class it belongs to.
inline std::vector<MatrixCell> test_matrix() {
  std::vector<MatrixCell> cells;
  for (const auto& f : test_functions()) {
    for (ShapeClass c : {ShapeClass::Monotone, ShapeClass::Convex}) {
      if (f.classify().contains(c)) cells.push_back({f, c});
    }
  }
  return cells;
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

// ------------------------------------------------------------- example1

struct ModulusRow {
  std::string function;
  ShapeClass cls = ShapeClass::Monotone;
  double eps = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

/// Closed form against the numeric oracle for the Linear family in both classes.
inline std::vector<ModulusRow> suite_example1(std::vector<Check>& checks, std::size_t grid = 1025,
                                              double tolerance = 0.02) {
  std::vector<ModulusRow> rows;
  NumericOptions opt;
  opt.grid_size = grid;
  for (double k : {0.0, 1.0, 5.0}) {
    const FunctionSpec f = FunctionSpec::linear(k);
    for (ShapeClass c : {ShapeClass::Monotone, ShapeClass::Convex}) {
      const ModulusOracle oracle(f, c, 0.0, opt);
      for (double eps : {0.005, 0.01, 0.02, 0.05}) {
        ModulusRow r{f.name(), c, eps, *modulus_analytic({f, c, eps, 0.0}).value, oracle.modulus(eps).value, 0.0};
        r.rel_err = std::fabs(r.numeric / r.analytic - 1.0);
        checks.push_back({"modulus " + r.function + " " + to_string(c) + " eps=" + std::to_string(eps),
                          r.rel_err <= tolerance, "rel_err=" + std::to_string(r.rel_err)});
        rows.push_back(r);
      }
    }
  }
  return rows;
}

// ------------------------------------------------------------- constants

struct ConstantRow {
  std::string name;
  double value = 0.0;
  double stated = 0.0;
};

/// Length-cap constants in units of z_a sigma_{j*}, and cap-to-bound ratios,
/// against the published values. Those are quoted to two decimals, so a
/// computed constant passes when it rounds at or below them.
inline std::vector<ConstantRow> constant_table(double alpha) {
  const bool at05 = std::fabs(alpha - 0.05) < 1e-12;
  std::vector<ConstantRow> rows;
  rows.push_back({"c0_monotone", upper_constant(ShapeClass::Monotone, alpha), at05 ? 7.71 : 8.85});
  rows.push_back({"c0_convex", upper_constant(ShapeClass::Convex, alpha), at05 ? 8.57 : 12.79});
  if (at05) {
    rows.push_back({"c1_monotone_ratio", ratio_constant(ShapeClass::Monotone, alpha), 14.40});
    rows.push_back({"c2_convex_ratio", ratio_constant(ShapeClass::Convex, alpha), 24.0});
  }
  return rows;
}

struct ConstantsSuite {
  std::vector<ConstantRow> constants;
  std::vector<BenchmarkReport> reports;
};

inline ConstantsSuite suite_constants(double alpha, long n, long replications, std::uint64_t seed, int workers,
                                      std::vector<Check>& checks) {
  check_bound_alpha(alpha);
  ConstantsSuite s;
  s.constants = constant_table(alpha);
  for (const auto& c : s.constants) {
    checks.push_back({"constant " + c.name, c.value <= c.stated + 0.005,
                      "value=" + std::to_string(c.value) + " stated=" + std::to_string(c.stated)});
  }
  for (const auto& cell : test_matrix()) {
    BenchmarkReport r = make_benchmark(cell.f, cell.cls, n, alpha);
    ExperimentPlan p;
    p.model = Model::WhiteNoise;
    p.cls = cell.cls;
    p.f = cell.f;
    p.alpha = alpha;
    p.n_list = {n};
    p.replications = replications;
    p.seed = seed;
    p.workers = workers;
    const NRecord rec = run(p).records.front();
    r.mc_length = rec.mean_length;
    const double cap_ratio = ratio_constant(cell.cls, alpha);
    const std::string tag = r.function + " " + to_string(cell.cls);
    checks.push_back({"ratio " + tag, r.ratio() <= cap_ratio,
                      "ratio=" + std::to_string(r.ratio()) + " limit=" + std::to_string(cap_ratio)});
    checks.push_back({"lower<=cap " + tag, r.lb_thm3or5 <= r.upper_cap, ""});
    checks.push_back({"length<=cap " + tag, rec.mean_length <= r.upper_cap + 3.0 * rec.length_se,
                      "length=" + std::to_string(rec.mean_length) + " cap=" + std::to_string(r.upper_cap)});
    s.reports.push_back(r);
  }
  return s;
}

// ------------------------------------------------------------- rates

struct RateCase {
  FunctionSpec f;
  ShapeClass cls;
  double expected;
};

inline std::vector<RateCase> rate_cases() {
  return {{FunctionSpec::linear(1.0), ShapeClass::Monotone, -1.0 / 3.0},
          {FunctionSpec::linear(1.0), ShapeClass::Convex, -0.5},
          {FunctionSpec::linear_plus_power(1.0, 2.0, 1.0), ShapeClass::Monotone, -1.0 / 3.0},
          {FunctionSpec::linear_plus_power(1.0, 2.0, 1.0), ShapeClass::Convex, -1.0 / 3.0},
          {FunctionSpec::square(), ShapeClass::Convex, -0.4},
          {FunctionSpec::odd_power(1.0, 3.0), ShapeClass::Monotone, -3.0 / 7.0},
          {FunctionSpec::odd_power(1.0, 1.0 / 3.0), ShapeClass::Monotone, -1.0 / 5.0}};
}

inline std::vector<long> rate_n_list() {
  std::vector<long> n;
  for (int e = 12; e <= 18; ++e) n.push_back(1L << e);
  return n;
}

struct RateRow {
  std::string function;
  ShapeClass cls = ShapeClass::Monotone;
  double expected = 0.0;
  RateFit fit;
  std::vector<NRecord> records;
};

inline std::vector<RateRow> suite_rates(long replications, std::uint64_t seed, int workers, double alpha,
                                        std::vector<Check>& checks, double tolerance = 0.08) {
  std::vector<RateRow> rows;
  for (const auto& rc : rate_cases()) {
    ExperimentPlan p;
    p.model = Model::WhiteNoise;
    p.cls = rc.cls;
    p.f = rc.f;
    p.alpha = alpha;
    p.n_list = rate_n_list();
    p.replications = replications;
    p.seed = seed;
    p.workers = workers;
    const ExperimentResult res = run(p);
    RateRow row{rc.f.name(), rc.cls, rc.expected, rate_fit(res), res.records};
    checks.push_back({"rate " + row.function + " " + to_string(rc.cls),
                      std::fabs(row.fit.slope - rc.expected) <= tolerance,
                      "slope=" + std::to_string(row.fit.slope) + " expected=" + std::to_string(rc.expected)});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace shapeci
