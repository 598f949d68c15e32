// shapeci: confidence intervals for f(t0) under monotone or convex shape
// constraints, plus the simulation and benchmark drivers.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapeci/shapeci.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shapeci;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitInput = 2;
constexpr int kExitBoundary = 3;
constexpr int kExitRuntime = 4;
constexpr std::uint64_t kDefaultSeed = 20240601;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SHAPECI_SEED")) {
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError(std::string("SHAPECI_SEED is not an unsigned integer: '") + env + "'");
  }
  return kDefaultSeed;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("bad number '" + tok + "'");
    }
  }
  return out;
}

// Either JSON ({"variant": ..., "params": ...}) or shorthand:
//   linear:K  lpp:K1,K2,R  odd:K,R  square  pwl:t0,v0;t1,v1;...
FunctionSpec parse_function(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    try {
      return FunctionSpec::from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw InputError(std::string("bad function JSON: ") + e.what());
    }
  }
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (kind == "square") return FunctionSpec::square();
    if (kind == "pwl") {
      std::vector<double> t, v;
      std::stringstream ss(args);
      std::string pair;
      while (std::getline(ss, pair, ';')) {
        const auto xy = split_numbers(pair);
        if (xy.size() != 2) throw InputError("pwl expects t,v pairs separated by ';'");
        t.push_back(xy[0]);
        v.push_back(xy[1]);
      }
      return FunctionSpec::piecewise_linear(t, v);
    }
    const auto p = split_numbers(args);
    if (kind == "linear" && p.size() == 1) return FunctionSpec::linear(p[0]);
    if (kind == "lpp" && p.size() == 3) return FunctionSpec::linear_plus_power(p[0], p[1], p[2]);
    if (kind == "odd" && p.size() == 2) return FunctionSpec::odd_power(p[0], p[1]);
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  throw InputError("cannot parse function '" + text + "' (try linear:1, lpp:1,2,1, odd:1,3, square)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = fs::path(dir) / ".shapeci_write_probe";
  std::ofstream f(probe);
  if (!f) throw InputError("output directory '" + dir + "' is not writable");
  f.close();
  fs::remove(probe, ec);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::ofstream f(fs::path(dir) / name);
  if (!f) throw InputError("cannot write " + (fs::path(dir) / name).string());
  return f;
}

std::string provenance_line(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

std::string hash_of(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(j.dump())));
  return buf;
}

void print_failures(const std::vector<Check>& checks) {
  json failed = json::array();
  for (const auto& c : checks) {
    if (!c.pass) failed.push_back({{"check", c.name}, {"detail", c.detail}});
  }
  if (!failed.empty()) std::cerr << json{{"failed", failed}}.dump() << "\n";
}

// ------------------------------------------------------------------ ci

struct CiArgs {
  std::string csv;
  std::string function;
  std::string model = "white_noise";
  std::string cls = "monotone";
  std::optional<double> sigma;
  double alpha = 0.05;
  double t0 = 0.0;
  long n = 4096;
  int j_max = 0;
  std::string json_out;
};

json interval_json(const Interval& ci) {
  return {{"lower", ci.empty ? json(nullptr) : json(ci.lower)},
          {"upper", ci.empty ? json(nullptr) : json(ci.upper)},
          {"empty", ci.empty},
          {"length", ci.length()}};
}

// Shape cannot be verified from noisy data; flag only gross departures.
void warn_shape(const DyadicBlocks& b, ShapeClass cls) {
  if (cls == ShapeClass::Monotone) {
    const auto s = reg_monotone_stats(b);
    for (const auto& lv : s.levels) {
      if (lv.xi < -4.0 * lv.sigma) {
        std::cerr << "warning: data decrease near the centre at level j=" << lv.j
                  << "; the monotone model may be wrong\n";
        return;
      }
    }
  } else if (b.big_j >= 3) {
    const auto s = reg_convex_stats(b);
    for (const auto& lv : s.levels) {
      if (lv.j >= 2 && lv.t < -4.0 * lv.sigma) {
        std::cerr << "warning: local averages fall with width at level j=" << lv.j
                  << "; the convex model may be wrong\n";
        return;
      }
    }
  }
}

int cmd_ci(const CiArgs& a, std::uint64_t seed) {
  check_alpha(a.alpha);
  check_interior(a.t0);
  const ShapeClass cls = shape_class_from_string(a.cls);
  json rec = {{"class", to_string(cls)}, {"alpha", a.alpha}, {"t0", a.t0}};

  if (!a.csv.empty()) {
    if (a.t0 != 0.0) throw InputError("regression data: intervals are for the centre point (t0 = 0)");
    std::ifstream in(a.csv);
    if (!in) throw InputError("cannot open " + a.csv);
    RegressionSample s = read_regression_csv(in, a.sigma.value_or(0.0));
    if (!a.sigma) {
      s.sigma = estimate_sigma(s.y);
      std::cerr << "note: sigma not given; difference-based estimate " << s.sigma << " used\n";
    }
    const DyadicBlocks b = blocks_from_sample(s);
    warn_shape(b, cls);
    rec["model"] = "regression";
    rec["input"] = a.csv;
    rec["n"] = s.n;
    rec["sigma"] = s.sigma;
    if (cls == ShapeClass::Monotone) {
      const auto r = ci_reg_m(b, a.alpha);
      rec["interval"] = interval_json(r.ci);
      rec["j_hat"] = r.stats.choice.j;
      rec["truncated"] = r.stats.choice.truncated;
      json lv = json::array();
      for (const auto& l : r.stats.levels) lv.push_back({{"j", l.j}, {"delta_r", l.delta_r}, {"delta_l", l.delta_l}, {"xi", l.xi}, {"sigma", l.sigma}});
      rec["levels"] = lv;
    } else {
      const auto r = ci_reg_c(b, a.alpha);
      rec["interval"] = interval_json(r.ci);
      rec["j_hat"] = r.stats.choice.j;
      rec["truncated"] = r.stats.choice.truncated;
      json lv = json::array();
      for (const auto& l : r.stats.levels) {
        lv.push_back({{"j", l.j}, {"delta_bar", l.delta_bar}, {"t", std::isnan(l.t) ? json(nullptr) : json(l.t)}, {"sigma", l.sigma}});
      }
      rec["levels"] = lv;
    }
  } else {
    if (a.function.empty()) throw InputError("ci needs --csv or --function");
    const FunctionSpec f = parse_function(a.function);
    const Model model = model_from_string(a.model);
    rec["function"] = f.to_json();
    rec["truth"] = f.evaluate(a.t0);
    rec["n"] = a.n;
    rec["seed"] = seed;
    if (model == Model::WhiteNoise) {
      rec["model"] = "white_noise";
      const int j_max = a.j_max > 0 ? a.j_max : default_j_max(a.n);
      const Procedure proc = cls == ShapeClass::Monotone ? Procedure::MonotoneWN : Procedure::ConvexWN;
      const DyadicPath path = sample_path(f, a.n, required_abscissae(proc, a.t0, j_max), {seed, 0});
      if (cls == ShapeClass::Monotone) {
        const auto r = ci_m_adaptive(path, a.t0, a.alpha, j_max);
        rec["interval"] = interval_json(r.ci);
        rec["j_hat"] = r.stats.choice.j;
        rec["truncated"] = r.stats.choice.truncated;
      } else {
        const auto r = ci_c_adaptive(path, a.t0, a.alpha, j_max);
        rec["interval"] = interval_json(r.ci);
        rec["j_hat"] = r.stats.choice.j;
        rec["truncated"] = r.stats.choice.truncated;
      }
    } else {
      if (a.t0 != 0.0) throw InputError("regression: intervals are for the centre point (t0 = 0)");
      const double sigma = a.sigma.value_or(1.0);
      rec["model"] = "regression";
      rec["sigma"] = sigma;
      const DyadicBlocks b = blocks_from_sample(simulate_regression(f, a.n, sigma, {seed, 0}));
      if (cls == ShapeClass::Monotone) {
        const auto r = ci_reg_m(b, a.alpha);
        rec["interval"] = interval_json(r.ci);
        rec["j_hat"] = r.stats.choice.j;
        rec["truncated"] = r.stats.choice.truncated;
      } else {
        const auto r = ci_reg_c(b, a.alpha);
        rec["interval"] = interval_json(r.ci);
        rec["j_hat"] = r.stats.choice.j;
        rec["truncated"] = r.stats.choice.truncated;
      }
    }
  }
  rec["config_hash"] = hash_of(rec);
  rec["seed"] = seed;

  const auto& iv = rec["interval"];
  if (iv["empty"].get<bool>()) {
    std::cout << "interval: empty (length 0)";
  } else {
    std::cout << "interval: [" << iv["lower"].get<double>() << ", " << iv["upper"].get<double>() << "]";
  }
  std::cout << "  j_hat=" << rec["j_hat"] << (rec["truncated"].get<bool>() ? " (truncated)" : "") << "\n";
  if (!a.json_out.empty()) {
    std::ofstream f(a.json_out);
    if (!f) throw InputError("cannot write " + a.json_out);
    f << rec.dump(2) << "\n";
  } else {
    std::cout << rec.dump() << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------ simulate

struct SimArgs {
  std::string function;
  std::string model = "regression";
  std::string cls = "monotone";
  long n = 1024;
  double sigma = 1.0;
  double t0 = 0.0;
  std::string out;
};

int cmd_simulate(const SimArgs& a, std::uint64_t seed) {
  const FunctionSpec f = parse_function(a.function);
  const Model model = model_from_string(a.model);
  const json cfg = {{"function", f.to_json()}, {"model", to_string(model)}, {"n", a.n}, {"sigma", a.sigma}, {"t0", a.t0}, {"class", a.cls}};
  std::ostringstream body;
  if (model == Model::Regression) {
    write_regression_csv(body, simulate_regression(f, a.n, a.sigma, {seed, 0}));
  } else {
    check_interior(a.t0);
    const ShapeClass cls = shape_class_from_string(a.cls);
    const Procedure proc = cls == ShapeClass::Monotone ? Procedure::MonotoneWN : Procedure::ConvexWN;
    const DyadicPath p = sample_path(f, a.n, required_abscissae(proc, a.t0, default_j_max(a.n)), {seed, 0});
    body << "t,Y\n";
    char buf[64];
    for (std::size_t i = 0; i < p.abscissae.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.abscissae[i], p.values[i]);
      body << buf;
    }
  }
  const std::string text = provenance_line(hash_of(cfg), seed) + body.str();
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(a.out);
    if (!f) throw InputError("cannot write " + a.out);
    f << text;
  }
  return kExitOk;
}

// ------------------------------------------------------------------ modulus

struct ModArgs {
  std::string function;
  std::string cls = "monotone";
  std::string eps = "0.005,0.01,0.02,0.05";
  std::size_t grid = 1025;
  double t0 = 0.0;
  bool uniform = false;
};

int cmd_modulus(const ModArgs& a) {
  const FunctionSpec f = parse_function(a.function);
  const ShapeClass cls = shape_class_from_string(a.cls);
  check_interior(a.t0);
  NumericOptions opt;
  opt.grid_size = a.grid;
  opt.graded = !a.uniform;
  if (!f.classify().contains(cls)) throw InputError(f.name() + " is not in the " + to_string(cls) + " class");
  const ModulusOracle oracle(f, cls, a.t0, opt);
  std::cout << "function,class,eps,omega_numeric,omega_analytic,exponent,asymptotic,in_window\n";
  for (double eps : split_numbers(a.eps)) {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    const double num = oracle.modulus(eps).value;
    std::string an = "", ex = "", asym = "", win = "";
    try {
      const AnalyticModulus m = modulus_analytic_raw({f, cls, eps, a.t0});
      an = m.value ? std::to_string(*m.value) : "";
      ex = std::to_string(m.exponent);
      asym = m.asymptotic ? "1" : "0";
      win = eps <= m.eps_max ? "1" : "0";
    } catch (const DomainError&) {
    }
    std::cout << '"' << f.name() << '"' << ',' << to_string(cls) << ',' << eps << ',' << num << ',' << an << ','
              << ex << ',' << asym << ',' << win << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------ bench / rates

struct BenchArgs {
  std::string suite;
  std::string config;
  std::string out_dir = ".";
  double alpha = 0.05;
  long n = 4096;
  long reps = 0;
  int workers = 1;
  std::size_t grid = 1025;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

int run_plan_file(const BenchArgs& a, std::optional<std::uint64_t> seed_flag, bool fit_rate) {
  json cfg = load_json_file(a.config);
  if (seed_flag || (!cfg.contains("seed") && std::getenv("SHAPECI_SEED"))) cfg["seed"] = resolve_seed(seed_flag);
  if (a.workers > 1 || !cfg.contains("workers")) cfg["workers"] = a.workers;
  const ExperimentPlan plan = plan_from_json(cfg);
  ensure_dir(a.out_dir);
  const ExperimentResult res = run(plan);
  const std::string stem = "run_" + res.config_hash;
  {
    auto f = open_out(a.out_dir, stem + ".csv");
    f << provenance_line(res.config_hash, res.seed);
    write_result_csv(f, res);
  }
  json summary = result_to_json(plan, res);
  int status = kExitOk;
  if (fit_rate) {
    const RateFit fit = rate_fit(res);
    summary["rate_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"stderr", fit.stderr_slope}};
    std::cout << "slope " << fit.slope << " (se " << fit.stderr_slope << ")\n";
  }
  open_out(a.out_dir, stem + ".json") << summary.dump(2) << "\n";
  for (const auto& r : res.records) {
    std::cout << "n=" << r.n << " coverage=" << r.coverage << " (se " << r.coverage_se << ") mean_length=" << r.mean_length
              << "\n";
  }
  std::cout << "wrote " << (fs::path(a.out_dir) / (stem + ".csv")).string() << " config_hash=" << res.config_hash
            << " seed=" << res.seed << "\n";
  return status;
}

int cmd_bench(const BenchArgs& a, std::optional<std::uint64_t> seed_flag) {
  if (!a.config.empty()) return run_plan_file(a, seed_flag, false);
  const std::uint64_t seed = resolve_seed(seed_flag);
  ensure_dir(a.out_dir);
  std::vector<Check> checks;
  const json cfg = {{"suite", a.suite}, {"alpha", a.alpha}, {"n", a.n}, {"reps", a.reps}, {"grid", a.grid}, {"seed", seed}};
  const std::string hash = hash_of(cfg);

  if (a.suite == "example1") {
    const auto rows = suite_example1(checks, a.grid);
    auto f = open_out(a.out_dir, "example1_moduli.csv");
    f << provenance_line(hash, seed) << "function,class,eps,omega_analytic,omega_numeric,rel_err\n";
    f.precision(10);
    for (const auto& r : rows) {
      f << '"' << r.function << '"' << ',' << to_string(r.cls) << ',' << r.eps << ',' << r.analytic << ',' << r.numeric
        << ',' << r.rel_err << "\n";
    }
  } else if (a.suite == "constants") {
    const auto s = suite_constants(a.alpha, a.n, a.reps > 0 ? a.reps : 2000, seed, a.workers, checks);
    auto c = open_out(a.out_dir, "constants.csv");
    c << provenance_line(hash, seed) << "name,value,stated\n";
    for (const auto& r : s.constants) c << r.name << ',' << r.value << ',' << r.stated << "\n";
    auto b = open_out(a.out_dir, "benchmark.csv");
    b << provenance_line(hash, seed) << kBenchmarkCsvHeader << "\n";
    for (const auto& r : s.reports) write_benchmark_row(b, r);
  } else if (a.suite == "rates") {
    const auto rows = suite_rates(a.reps > 0 ? a.reps : 1000, seed, a.workers, a.alpha, checks);
    auto f = open_out(a.out_dir, "rates.csv");
    f << provenance_line(hash, seed) << "function,class,expected_slope,slope,stderr,intercept\n";
    auto d = open_out(a.out_dir, "rates_lengths.csv");
    d << provenance_line(hash, seed) << "function,class,n,mean_length,se\n";
    for (const auto& r : rows) {
      f << '"' << r.function << '"' << ',' << to_string(r.cls) << ',' << r.expected << ',' << r.fit.slope << ','
        << r.fit.stderr_slope << ',' << r.fit.intercept << "\n";
      for (const auto& rec : r.records) {
        d << '"' << r.function << '"' << ',' << to_string(r.cls) << ',' << rec.n << ',' << rec.mean_length << ','
          << rec.length_se << "\n";
      }
    }
  } else {
    throw InputError("unknown suite '" + a.suite + "' (example1, constants, rates)");
  }
  std::size_t passed = 0;
  for (const auto& c : checks) passed += c.pass;
  std::cout << a.suite << ": " << passed << "/" << checks.size() << " checks passed; outputs in " << a.out_dir
            << " (config_hash=" << hash << " seed=" << seed << ")\n";
  print_failures(checks);
  return all_pass(checks) ? kExitOk : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapeci: adaptive confidence intervals under shape constraints"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;

  CiArgs ci;
  auto* ci_cmd = app.add_subcommand("ci", "interval for f(t0) from a regression CSV or a simulated draw");
  ci_cmd->add_option("--csv", ci.csv, "regression data with header i,x,y and i = -n..n");
  ci_cmd->add_option("--function", ci.function, "simulate from this function instead (linear:1, square, JSON, ...)");
  ci_cmd->add_option("--model", ci.model, "white_noise or regression (with --function)");
  ci_cmd->add_option("--class", ci.cls, "monotone or convex");
  ci_cmd->add_option("--sigma", ci.sigma, "known noise level (regression)");
  ci_cmd->add_option("--alpha", ci.alpha, "1 - nominal coverage");
  ci_cmd->add_option("--t0", ci.t0, "target point in (-1/2, 1/2)");
  ci_cmd->add_option("--n", ci.n, "noise level / sample size parameter");
  ci_cmd->add_option("--j-max", ci.j_max, "cap on the white-noise level (default floor(log2 n))");
  ci_cmd->add_option("--json-out", ci.json_out, "write the JSON record here");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a data set");
  sim_cmd->add_option("--function", sim.function, "target function")->required();
  sim_cmd->add_option("--model", sim.model, "regression or white_noise");
  sim_cmd->add_option("--class", sim.cls, "procedure whose abscissae to sample (white_noise)");
  sim_cmd->add_option("--n", sim.n, "n");
  sim_cmd->add_option("--sigma", sim.sigma, "noise level (regression)");
  sim_cmd->add_option("--t0", sim.t0, "target point (white_noise)");
  sim_cmd->add_option("-o,--out", sim.out, "output CSV (default stdout)");

  ModArgs mod;
  auto* mod_cmd = app.add_subcommand("modulus", "local modulus, numeric and closed form");
  mod_cmd->add_option("--function", mod.function, "target function")->required();
  mod_cmd->add_option("--class", mod.cls, "monotone or convex");
  mod_cmd->add_option("--eps", mod.eps, "comma-separated eps values");
  mod_cmd->add_option("--grid", mod.grid, "grid size (odd, >= 257)");
  mod_cmd->add_option("--t0", mod.t0, "target point");
  mod_cmd->add_flag("--uniform", mod.uniform, "uniform grid instead of one graded toward t0");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "benchmark suites, or a plan file");
  bench_cmd->add_option("--suite", bench.suite, "example1, constants or rates");
  bench_cmd->add_option("--config", bench.config, "experiment plan (JSON)");
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory");
  bench_cmd->add_option("--alpha", bench.alpha, "alpha");
  bench_cmd->add_option("--n", bench.n, "n for the constants suite");
  bench_cmd->add_option("--reps", bench.reps, "replications per cell");
  bench_cmd->add_option("--workers", bench.workers, "worker threads");
  bench_cmd->add_option("--grid", bench.grid, "modulus grid size");

  BenchArgs rates;
  auto* rates_cmd = app.add_subcommand("rates", "run a plan over an n ladder and fit log length on log n");
  rates_cmd->add_option("--config", rates.config, "experiment plan (JSON)")->required();
  rates_cmd->add_option("--out-dir", rates.out_dir, "output directory");
  rates_cmd->add_option("--workers", rates.workers, "worker threads");

  for (auto* sub : {ci_cmd, sim_cmd, bench_cmd, rates_cmd}) {
    sub->add_option("--seed", seed, "base seed (falls back to $SHAPECI_SEED)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*ci_cmd) return cmd_ci(ci, resolve_seed(seed));
    if (*sim_cmd) return cmd_simulate(sim, resolve_seed(seed));
    if (*mod_cmd) return cmd_modulus(mod);
    if (*bench_cmd) {
      if (bench.suite.empty() == bench.config.empty()) throw InputError("bench needs exactly one of --suite or --config");
      return cmd_bench(bench, seed);
    }
    if (*rates_cmd) return run_plan_file(rates, seed, true);
  } catch (const BoundaryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBoundary;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
