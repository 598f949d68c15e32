#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "shapeci/convex_wn.hpp"
#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/interval.hpp"
#include "shapeci/modulus.hpp"
#include "shapeci/monotone_wn.hpp"
#include "shapeci/regression.hpp"
#include "shapeci/rng.hpp"
#include "shapeci/white_noise.hpp"

namespace shapeci {

enum class Model { WhiteNoise, Regression };

inline const char* to_string(Model m) { return m == Model::WhiteNoise ? "white_noise" : "regression"; }

inline Model model_from_string(const std::string& s) {
  if (s == "white_noise" || s == "WhiteNoise" || s == "wn") return Model::WhiteNoise;
  if (s == "regression" || s == "Regression" || s == "reg") return Model::Regression;
  throw InputError("unknown model '" + s + "'");
}

struct ExperimentPlan {
  Model model = Model::WhiteNoise;
  ShapeClass cls = ShapeClass::Monotone;
  FunctionSpec f = FunctionSpec::linear(0.0);
  double t0 = 0.0;
  double alpha = 0.05;
  std::vector<long> n_list{4096};
  double sigma = 1.0;  // regression noise level
  long replications = 10000;
  std::uint64_t seed = 20240601;
  int workers = 1;
  bool allow_misspecified = false;
  bool full_regression_sample = false;  // draw all 2n+1 points instead of block sums
  int fixed_j = 0;                      // > 0: fixed-level interval at this j (white noise)
  int j_max = 0;                        // 0: floor(log2 n)
  double max_work = 4e10;               // cap on total normal draws
};

/// One replication.
struct Outcome {
  bool covered = false;
  bool empty = false;
  bool truncated = false;
  int j = 0;
  double length = 0.0;
};

struct NRecord {
  long n = 0;
  long replications = 0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_length = 0.0;
  double length_se = 0.0;
  double empty_freq = 0.0;
  double truncation_freq = 0.0;
  std::map<int, long> j_hist;
  // White-noise benchmarks; NaN where they do not apply.
  int j_star = 0;
  double sigma_jstar = std::numeric_limits<double>::quiet_NaN();
  double length_cap = std::numeric_limits<double>::quiet_NaN();
  double lower_bound = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<NRecord> records;
};

// ------------------------------------------------------------------ config

namespace detail {
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

inline nlohmann::json plan_to_json(const ExperimentPlan& p, bool with_workers = true) {
  nlohmann::json j = {{"model", to_string(p.model)},
                      {"class", to_string(p.cls)},
                      {"function", p.f.to_json()},
                      {"t0", p.t0},
                      {"alpha", p.alpha},
                      {"n", p.n_list},
                      {"sigma", p.sigma},
                      {"replications", p.replications},
                      {"seed", p.seed},
                      {"allow_misspecified", p.allow_misspecified},
                      {"full_regression_sample", p.full_regression_sample},
                      {"fixed_j", p.fixed_j},
                      {"j_max", p.j_max},
                      {"max_work", p.max_work}};
  if (with_workers) j["workers"] = p.workers;
  return j;
}

/// Hash of everything that can change the numbers; the worker count cannot.
inline std::string config_hash(const ExperimentPlan& p) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(plan_to_json(p, false).dump())));
  return buf;
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("plan must be a JSON object");
  static const std::vector<std::string> known = {
      "model", "class", "function", "t0", "alpha", "n", "sigma", "replications", "seed", "workers",
      "allow_misspecified", "full_regression_sample", "fixed_j", "j_max", "max_work"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InputError("unknown plan key '" + key + "'");
  }
  ExperimentPlan p;
  try {
    if (j.contains("model")) p.model = model_from_string(j.at("model").get<std::string>());
    if (j.contains("class")) p.cls = shape_class_from_string(j.at("class").get<std::string>());
    if (!j.contains("function")) throw InputError("plan needs a 'function'");
    p.f = FunctionSpec::from_json(j.at("function"));
    p.t0 = j.value("t0", p.t0);
    p.alpha = j.value("alpha", p.alpha);
    if (j.contains("n")) {
      const auto& n = j.at("n");
      p.n_list = n.is_array() ? n.get<std::vector<long>>() : std::vector<long>{n.get<long>()};
    }
    p.sigma = j.value("sigma", p.sigma);
    p.replications = j.value("replications", p.replications);
    p.seed = j.value("seed", p.seed);
    p.workers = j.value("workers", p.workers);
    p.allow_misspecified = j.value("allow_misspecified", p.allow_misspecified);
    p.full_regression_sample = j.value("full_regression_sample", p.full_regression_sample);
    p.fixed_j = j.value("fixed_j", p.fixed_j);
    p.j_max = j.value("j_max", p.j_max);
    p.max_work = j.value("max_work", p.max_work);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("plan: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("plan: ") + e.what());
  }
  return p;
}

/// Draws per replication, for the resource cap.
inline double replication_cost(const ExperimentPlan& p, long n) {
  if (p.model == Model::Regression) return p.full_regression_sample ? 2.0 * static_cast<double>(n) + 1.0 : 64.0;
  return 4.0 * (p.j_max > 0 ? p.j_max : default_j_max(n)) + 4.0;
}

/// Throws InputError on an invalid plan.
inline void validate(const ExperimentPlan& p) {
  auto bad = [](const std::string& m) { throw InputError("invalid plan: " + m); };
  if (!(p.alpha > 0.0 && p.alpha < 0.5)) bad("alpha must lie in (0, 1/2)");
  if (p.replications < 100) bad("replications must be >= 100");
  if (p.workers < 1) bad("workers must be >= 1");
  if (p.n_list.empty()) bad("n list is empty");
  if (!(std::fabs(p.t0) < kHalf)) throw BoundaryError("t0 = " + std::to_string(p.t0) +
                                                      " is on the boundary: an honest interval for f(+-1/2) must be unbounded");
  if (!p.allow_misspecified && !p.f.classify().contains(p.cls)) {
    bad(p.f.name() + " is not in the " + std::string(to_string(p.cls)) + " class (set allow_misspecified to study this)");
  }
  for (long n : p.n_list) {
    if (n < (p.cls == ShapeClass::Convex && p.model == Model::Regression ? 8 : 4)) bad("n too small: " + std::to_string(n));
  }
  if (p.model == Model::Regression) {
    if (p.t0 != 0.0) bad("regression intervals are centred at the middle design point (t0 = 0)");
    if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) bad("sigma must be >= 0");
    if (p.fixed_j != 0) bad("fixed_j applies to the white-noise model only");
  } else {
    const int floor_j = p.cls == ShapeClass::Monotone ? min_level_monotone(p.t0) : min_level_convex(p.t0);
    if (p.fixed_j != 0 && p.fixed_j < floor_j) bad("fixed_j below the admissible floor " + std::to_string(floor_j));
    if (p.j_max != 0 && p.j_max < std::max(floor_j, p.fixed_j)) bad("j_max below the levels it must cover");
  }
  double work = 0.0;
  for (long n : p.n_list) work += static_cast<double>(p.replications) * replication_cost(p, n);
  if (work > p.max_work) {
    bad("resource cap exceeded: " + std::to_string(work) + " draws > max_work " + std::to_string(p.max_work));
  }
}

// ------------------------------------------------------------------ running

namespace detail {

/// Runs body(r) for r in [0, count) on `workers` threads. Each index is
/// processed exactly once; outputs go to caller-owned slots.
template <class Body>
void parallel_for(long count, int workers, Body body) {
  if (workers <= 1 || count < 2) {
    for (long r = 0; r < count; ++r) body(r);
    return;
  }
  constexpr long kChunk = 64;
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (;;) {
        const long start = next.fetch_add(kChunk);
        if (start >= count) break;
        const long stop = std::min(count, start + kChunk);
        for (long r = start; r < stop; ++r) body(r);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(count);
    }
  };
  std::vector<std::thread> pool;
  const int used = static_cast<int>(std::min<long>(workers, count));
  for (int w = 0; w < used; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline Outcome score(const Interval& ci, double truth, const LevelChoice& choice) {
  return {ci.contains(truth), ci.empty, choice.truncated, choice.j, ci.length()};
}

}  // namespace detail

/// Replication-level outcomes for one n, in replication order.
inline std::vector<Outcome> simulate_outcomes(const ExperimentPlan& p, std::size_t n_index) {
  const long n = p.n_list.at(n_index);
  const double truth = p.f.evaluate(p.t0);
  const auto base = static_cast<std::uint64_t>(n_index) * static_cast<std::uint64_t>(p.replications);
  std::vector<Outcome> out(static_cast<std::size_t>(p.replications));

  if (p.model == Model::WhiteNoise) {
    const Procedure proc = p.cls == ShapeClass::Monotone ? Procedure::MonotoneWN : Procedure::ConvexWN;
    const int j_max = std::max(p.j_max > 0 ? p.j_max : default_j_max(n), p.fixed_j);
    const WhiteNoiseSampler sampler(p.f, n, required_abscissae(proc, p.t0, j_max));
    detail::parallel_for(p.replications, p.workers, [&](long r) {
      const DyadicPath path = sampler.sample({p.seed, base + static_cast<std::uint64_t>(r)});
      Outcome& o = out[static_cast<std::size_t>(r)];
      if (p.cls == ShapeClass::Monotone) {
        if (p.fixed_j > 0) {
          o = detail::score(ci_m_fixed(estimators_m(path, p.t0, p.fixed_j), p.alpha), truth, {p.fixed_j, false});
        } else {
          const auto res = ci_m_adaptive(path, p.t0, p.alpha, j_max);
          o = detail::score(res.ci, truth, res.stats.choice);
        }
      } else {
        if (p.fixed_j > 0) {
          o = detail::score(ci_c_fixed(estimators_c(path, p.t0, p.fixed_j), p.alpha, p.t0 != 0.0), truth,
                            {p.fixed_j, false});
        } else {
          const auto res = ci_c_adaptive(path, p.t0, p.alpha, j_max);
          o = detail::score(res.ci, truth, res.stats.choice);
        }
      }
    });
    return out;
  }

  const RegressionBlockSampler blocks(p.f, n, p.sigma);
  detail::parallel_for(p.replications, p.workers, [&](long r) {
    const SeedSpec seed{p.seed, base + static_cast<std::uint64_t>(r)};
    const DyadicBlocks b =
        p.full_regression_sample ? blocks_from_sample(simulate_regression(p.f, n, p.sigma, seed)) : blocks.sample(seed);
    Outcome& o = out[static_cast<std::size_t>(r)];
    if (p.cls == ShapeClass::Monotone) {
      const auto res = ci_reg_m(b, p.alpha);
      o = detail::score(res.ci, truth, res.stats.choice);
    } else {
      const auto res = ci_reg_c(b, p.alpha);
      o = detail::score(res.ci, truth, res.stats.choice);
    }
  });
  return out;
}

/// Reduces outcomes in replication order, so the sums do not depend on threading.
inline NRecord summarize(long n, const std::vector<Outcome>& outcomes) {
  NRecord rec;
  rec.n = n;
  rec.replications = static_cast<long>(outcomes.size());
  const double r = static_cast<double>(outcomes.size());
  long covered = 0, empty = 0, truncated = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& o : outcomes) {
    covered += o.covered;
    empty += o.empty;
    truncated += o.truncated;
    sum += o.length;
    sum_sq += o.length * o.length;
    ++rec.j_hist[o.j];
  }
  rec.coverage = static_cast<double>(covered) / r;
  rec.coverage_se = std::sqrt(rec.coverage * (1.0 - rec.coverage) / r);
  rec.mean_length = sum / r;
  const double var = std::max(0.0, (sum_sq - sum * sum / r) / (r - 1.0));
  rec.length_se = std::sqrt(var / r);
  rec.empty_freq = static_cast<double>(empty) / r;
  rec.truncation_freq = static_cast<double>(truncated) / r;
  return rec;
}

/// Oracle level, length cap and lower bound for white-noise runs with f in the
/// class and alpha <= 0.2.
inline void attach_benchmarks(const ExperimentPlan& p, NRecord& rec) {
  if (p.model != Model::WhiteNoise || p.fixed_j != 0 || p.alpha > 0.2) return;
  if (!p.f.classify().contains(p.cls)) return;
  if (p.cls == ShapeClass::Monotone) {
    const JStar js = j_star_m(p.f, rec.n, p.alpha, p.t0);
    rec.j_star = js.j;
    rec.sigma_jstar = js.sigma;
    rec.length_cap = monotone_length_cap(p.alpha, js.sigma);
    rec.lower_bound = lower_bound_thm3(p.f, rec.n, p.alpha, p.t0);
  } else {
    const JStar js = j_star_c(p.f, rec.n, p.alpha, p.t0);
    rec.j_star = js.j;
    rec.sigma_jstar = js.sigma;
    rec.length_cap = convex_length_cap(p.alpha, js.sigma);
    rec.lower_bound = lower_bound_thm5(p.f, rec.n, p.alpha, p.t0);
  }
  rec.ratio = rec.mean_length / rec.lower_bound;
}

/// Runs the plan. Replication r at the i-th n uses seed (plan.seed, i R + r), so
/// the result is a function of the plan alone, whatever the worker count.
inline ExperimentResult run(const ExperimentPlan& p) {
  validate(p);
  ExperimentResult res;
  res.config_hash = config_hash(p);
  res.seed = p.seed;
  for (std::size_t i = 0; i < p.n_list.size(); ++i) {
    NRecord rec = summarize(p.n_list[i], simulate_outcomes(p, i));
    attach_benchmarks(p, rec);
    res.records.push_back(std::move(rec));
  }
  return res;
}

// ------------------------------------------------------------------ rates

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

/// Least-squares line through (log n, log length).
inline RateFit rate_fit(const std::vector<double>& n, const std::vector<double>& length) {
  if (n.size() != length.size()) throw DomainError("rate_fit: size mismatch");
  if (n.size() < 4) throw DomainError("rate_fit: need at least 4 values of n");
  const std::size_t k = n.size();
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(n[i] > 0.0) || !(length[i] > 0.0)) throw DomainError("rate_fit: values must be positive");
    x[i] = std::log(n[i]);
    y[i] = std::log(length[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("rate_fit: n values must differ");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    sse += e * e;
  }
  fit.stderr_slope = std::sqrt(sse / static_cast<double>(k - 2) / sxx);
  return fit;
}

inline RateFit rate_fit(const ExperimentResult& r) {
  std::vector<double> n, len;
  for (const auto& rec : r.records) {
    n.push_back(static_cast<double>(rec.n));
    len.push_back(rec.mean_length);
  }
  return rate_fit(n, len);
}

// ------------------------------------------------------------------ output

namespace detail {
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Long-format table: one row per (n, metric).
inline void write_result_csv(std::ostream& os, const ExperimentResult& r) {
  os << "n,metric,value,se\n";
  for (const auto& rec : r.records) {
    auto row = [&](const std::string& metric, double v, double se) {
      os << rec.n << ',' << metric << ',' << detail::num(v) << ',' << detail::num(se) << '\n';
    };
    const double reps = static_cast<double>(rec.replications);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row("coverage", rec.coverage, rec.coverage_se);
    row("mean_length", rec.mean_length, rec.length_se);
    row("empty_freq", rec.empty_freq, std::sqrt(rec.empty_freq * (1.0 - rec.empty_freq) / reps));
    row("truncation_freq", rec.truncation_freq, std::sqrt(rec.truncation_freq * (1.0 - rec.truncation_freq) / reps));
    row("j_star", rec.j_star == 0 ? nan : rec.j_star, nan);
    row("sigma_jstar", rec.sigma_jstar, nan);
    row("length_cap", rec.length_cap, nan);
    row("lower_bound", rec.lower_bound, nan);
    row("ratio", rec.ratio, rec.length_se / rec.lower_bound);
    for (const auto& [j, count] : rec.j_hist) {
      const double f = static_cast<double>(count) / reps;
      row("jhat_" + std::to_string(j), f, std::sqrt(f * (1.0 - f) / reps));
    }
  }
}

inline nlohmann::json result_to_json(const ExperimentPlan& p, const ExperimentResult& r) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : r.records) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [j, count] : rec.j_hist) hist[std::to_string(j)] = count;
    auto opt = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    recs.push_back({{"n", rec.n},
                    {"replications", rec.replications},
                    {"coverage", rec.coverage},
                    {"coverage_se", rec.coverage_se},
                    {"mean_length", rec.mean_length},
                    {"length_se", rec.length_se},
                    {"empty_freq", rec.empty_freq},
                    {"truncation_freq", rec.truncation_freq},
                    {"j_hat_histogram", hist},
                    {"j_star", rec.j_star == 0 ? nlohmann::json(nullptr) : nlohmann::json(rec.j_star)},
                    {"sigma_jstar", opt(rec.sigma_jstar)},
                    {"length_cap", opt(rec.length_cap)},
                    {"lower_bound", opt(rec.lower_bound)},
                    {"ratio", opt(rec.ratio)}});
  }
  return {{"config_hash", r.config_hash}, {"seed", r.seed}, {"plan", plan_to_json(p)}, {"results", recs}};
}

}  // namespace shapeci
