// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Pass --verbose to print every cell, not just the failing ones.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "shapeci/shapeci.hpp"

using namespace shapeci;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr long kReps = 10000;
bool g_verbose = false;

struct Criterion {
  int id;
  std::string title;
  std::vector<Check> checks;
};

void report(const Criterion& c, int& failures) {
  int failed = 0;
  for (const auto& ch : c.checks) failed += !ch.pass;
  const bool pass = failed == 0 && !c.checks.empty();
  std::printf("%s criterion %d: %s (%zu checks, %d failed)\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
              c.checks.size(), failed);
  for (const auto& ch : c.checks) {
    if (g_verbose || !ch.pass) std::printf("    %s %s %s\n", ch.pass ? "ok  " : "FAIL", ch.name.c_str(), ch.detail.c_str());
  }
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

ExperimentPlan plan(Model model, const FunctionSpec& f, ShapeClass c, double alpha, long reps) {
  ExperimentPlan p;
  p.model = model;
  p.cls = c;
  p.f = f;
  p.alpha = alpha;
  p.n_list = {4096};
  p.replications = reps;
  p.seed = kSeed;
  return p;
}

double binomial_floor(double alpha, long reps) {
  return 1.0 - alpha - 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(reps));
}

std::string cell_name(const FunctionSpec& f, ShapeClass c) { return f.name() + " " + to_string(c); }

// 1. Adaptive coverage over the test matrix, both models.
Criterion coverage() {
  Criterion c{1, "adaptive coverage >= 0.95 - 3 se, R=1e4, n=4096", {}};
  const double floor = binomial_floor(0.05, kReps);
  for (Model m : {Model::WhiteNoise, Model::Regression}) {
    for (const auto& cell : test_matrix()) {
      ExperimentPlan p = plan(m, cell.f, cell.cls, 0.05, kReps);
      p.full_regression_sample = true;
      const NRecord r = run(p).records.front();
      c.checks.push_back({std::string(to_string(m)) + " " + cell_name(cell.f, cell.cls), r.coverage >= floor,
                          fmt("coverage=%.4f floor=%.4f", r.coverage, floor)});
    }
  }
  return c;
}

// 2 and 3 share the white-noise runs.
struct LengthRuns {
  Criterion caps{2, "mean length <= cap + 3 se, white noise, alpha in {0.05, 0.2}", {}};
  Criterion ratios{3, "mean length / lower bound <= 14.40 (monotone), 24 (convex) at alpha=0.05", {}};
};

LengthRuns lengths() {
  LengthRuns out;
  for (double alpha : {0.05, 0.2}) {
    for (const auto& cell : test_matrix()) {
      const NRecord r = run(plan(Model::WhiteNoise, cell.f, cell.cls, alpha, kReps)).records.front();
      const std::string name = cell_name(cell.f, cell.cls) + " alpha=" + (alpha == 0.05 ? "0.05" : "0.2");
      out.caps.checks.push_back({name, r.mean_length <= r.length_cap + 3.0 * r.length_se,
                                 fmt("length=%.6g cap=%.6g", r.mean_length, r.length_cap)});
      if (alpha == 0.05) {
        const double limit = cell.cls == ShapeClass::Monotone ? 14.40 : 24.0;
        out.ratios.checks.push_back({name, r.ratio <= limit, fmt("ratio=%.3f limit=%.2f", r.ratio, limit)});
      }
    }
  }
  return out;
}

// 4. Rate exponents over n = 2^12..2^18 with 10^3 replications per n.
Criterion rates() {
  Criterion c{4, "log-log length slopes within 0.08 of the minimax rates", {}};
  suite_rates(1000, kSeed, 1, 0.05, c.checks, 0.08);
  return c;
}

// 5. Numeric modulus against every exact closed form inside its window.
Criterion modulus() {
  Criterion c{5, "numeric modulus within 2% of closed forms, grid 1025", {}};
  for (const auto& cell : test_matrix()) {
    const ModulusOracle oracle(cell.f, cell.cls, 0.0);
    for (double eps : {0.005, 0.01, 0.02, 0.05}) {
      const AnalyticModulus a = modulus_analytic_raw({cell.f, cell.cls, eps, 0.0});
      if (!a.value || a.asymptotic || eps > a.eps_max) continue;
      const double num = oracle.modulus(eps).value;
      const double rel = std::fabs(num / *a.value - 1.0);
      char name[160];
      std::snprintf(name, sizeof name, "%s eps=%g", cell_name(cell.f, cell.cls).c_str(), eps);
      c.checks.push_back({name, rel <= 0.02, fmt("numeric=%.6g rel_err=%.2e", num, rel)});
    }
  }
  return c;
}

// 6. Bias inequalities with exact integrals and sums.
Criterion lemmas() {
  Criterion c{6, "convex bias inequalities, slack >= -1e-10, j <= 6", {}};
  std::vector<FunctionSpec> fs;
  for (const auto& f : test_functions()) {
    if (f.classify().convex) fs.push_back(f);
  }
  std::mt19937_64 gen(kSeed);
  std::normal_distribution<double> z(0.0, 3.0);
  std::uniform_real_distribution<double> u(-0.49, 0.49);
  std::uniform_int_distribution<int> count(1, 8);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> knots{-0.5, 0.5};
    for (int k = count(gen); k > 0; --k) knots.push_back(u(gen));
    std::sort(knots.begin(), knots.end());
    std::vector<double> slopes(knots.size() - 1);
    for (double& s : slopes) s = z(gen);
    std::sort(slopes.begin(), slopes.end());
    std::vector<double> v{z(gen)};
    for (std::size_t k = 0; k < slopes.size(); ++k) v.push_back(v.back() + slopes[k] * (knots[k + 1] - knots[k]));
    fs.push_back(FunctionSpec::piecewise_linear(knots, v));
  }
  double worst1 = INFINITY, worst2 = INFINITY;
  int bad1 = 0, bad2 = 0;
  for (const auto& f : fs) {
    for (int j = 1; j <= 6; ++j) {
      const double s1 = lemma1_slack(f, j).min();
      const double s2 = lemma2_slack(f, 4096, j).min();
      worst1 = std::min(worst1, s1);
      worst2 = std::min(worst2, s2);
      bad1 += s1 < -1e-10;
      bad2 += s2 < -1e-10;
    }
  }
  c.checks.push_back({"white-noise inequalities (" + std::to_string(fs.size()) + " functions)", bad1 == 0,
                      fmt("min slack=%.3g violations=%g", worst1, bad1)});
  c.checks.push_back({"regression inequalities, n=4096 (" + std::to_string(fs.size()) + " functions)", bad2 == 0,
                      fmt("min slack=%.3g violations=%g", worst2, bad2)});
  return c;
}

// 7. Fixed-level coverage. Square is not monotone, so the monotone levels run
// on Linear only.
Criterion fixed_levels() {
  Criterion c{7, "fixed-level coverage >= 0.95 - 3 se, R=1e4", {}};
  const double floor = binomial_floor(0.05, kReps);
  for (const auto& f : {FunctionSpec::square(), FunctionSpec::linear(1.0)}) {
    for (ShapeClass cls : {ShapeClass::Monotone, ShapeClass::Convex}) {
      if (!f.classify().contains(cls)) continue;
      const int lo = cls == ShapeClass::Monotone ? 2 : 1;
      for (int j = lo; j <= lo + 4; ++j) {
        ExperimentPlan p = plan(Model::WhiteNoise, f, cls, 0.05, kReps);
        p.fixed_j = j;
        const NRecord r = run(p).records.front();
        c.checks.push_back({cell_name(f, cls) + " j=" + std::to_string(j), r.coverage >= floor,
                            fmt("coverage=%.4f floor=%.4f", r.coverage, floor)});
      }
    }
  }
  return c;
}

// 8. Byte-identical CSVs for worker counts 1, 4 and 8.
Criterion determinism() {
  Criterion c{8, "identical CSV bytes for workers 1, 4, 8", {}};
  std::vector<ExperimentPlan> plans = {plan(Model::WhiteNoise, FunctionSpec::square(), ShapeClass::Convex, 0.05, 5000),
                                       plan(Model::WhiteNoise, FunctionSpec::odd_power(1.0, 3.0), ShapeClass::Monotone,
                                            0.05, 5000),
                                       plan(Model::Regression, FunctionSpec::linear(1.0), ShapeClass::Monotone, 0.05, 5000),
                                       plan(Model::Regression, FunctionSpec::square(), ShapeClass::Convex, 0.05, 2000)};
  plans[0].n_list = {1024, 4096, 16384};
  plans[3].full_regression_sample = true;
  for (auto& p : plans) {
    std::string first;
    bool same = true;
    for (int w : {1, 4, 8}) {
      p.workers = w;
      std::ostringstream os;
      write_result_csv(os, run(p));
      if (w == 1) {
        first = os.str();
      } else {
        same = same && os.str() == first;
      }
    }
    c.checks.push_back({std::string(to_string(p.model)) + " " + cell_name(p.f, p.cls), same,
                        "bytes=" + std::to_string(first.size())});
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--verbose") == 0) g_verbose = true;
  }
  int failures = 0;
  try {
    report(coverage(), failures);
    LengthRuns lr = lengths();
    report(lr.caps, failures);
    report(lr.ratios, failures);
    report(rates(), failures);
    report(modulus(), failures);
    report(lemmas(), failures);
    report(fixed_levels(), failures);
    report(determinism(), failures);
  } catch (const std::exception& e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
