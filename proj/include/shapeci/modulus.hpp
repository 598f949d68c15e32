#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "shapeci/convex_wn.hpp"
#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/monotone_wn.hpp"
#include "shapeci/normal.hpp"
#include "shapeci/projection.hpp"

namespace shapeci {

/// omega(eps, f, class) = sup |g(t0) - f(t0)| over g in the class with ||g - f||_2 <= eps.
struct ModulusQuery {
  FunctionSpec f;
  ShapeClass cls = ShapeClass::Monotone;
  double eps = 0.0;
  double t0 = 0.0;
};

struct AnalyticModulus {
  std::optional<double> value;  // absent when only the rate is known
  double exponent = 0.0;        // omega ~ eps^exponent
  bool asymptotic = false;      // leading term only
  double eps_max = std::numeric_limits<double>::infinity();  // validity window
};

namespace detail {

inline void check_query(const ModulusQuery& q) {
  if (!(q.eps > 0.0) || !std::isfinite(q.eps)) throw DomainError("modulus: eps must be positive");
  check_interior(q.t0);
}

// Monotone and f = k sign(t)|t|^r: the extremal g flattens f to f(0) +- a
// over [0, (a/k)^{1/r}], so eps^2 = c a^{2 + 1/r} k^{-1/r}, c = 2r^2/((r+1)(2r+1)).
inline AnalyticModulus power_monotone(double k, double r, double eps) {
  const double c = 2.0 * r * r / ((r + 1.0) * (2.0 * r + 1.0));
  AnalyticModulus m;
  m.exponent = 2.0 * r / (2.0 * r + 1.0);
  m.value = std::pow(k, 1.0 / (2.0 * r + 1.0)) * std::pow(c, -r / (2.0 * r + 1.0)) * std::pow(eps, m.exponent);
  // The flat stretch must stay inside [0, 1/2].
  m.eps_max = std::sqrt(c * k * k * std::pow(0.5, 2.0 * r + 1.0));
  return m;
}

}  // namespace detail

/// Closed-form local modulus at t0 = 0 for the covered (function, class) pairs.
/// Throws DomainError for uncovered pairs and for eps outside the validity window.
inline AnalyticModulus modulus_analytic_raw(const ModulusQuery& q) {
  detail::check_query(q);
  if (q.t0 != 0.0) throw DomainError("modulus_analytic: closed forms are for t0 = 0 only");
  if (!q.f.classify().contains(q.cls)) {
    throw DomainError("modulus_analytic: " + q.f.name() + " is not in the " + to_string(q.cls) + " class");
  }
  const double eps = q.eps;
  const bool mono = q.cls == ShapeClass::Monotone;
  auto linear = [&](double k) {
    AnalyticModulus m;
    if (!mono) {
      m.exponent = 1.0;
      m.value = 2.0 * eps;
    } else if (k == 0.0) {
      m.exponent = 1.0;
      m.value = std::numbers::sqrt2 * eps;
    } else {
      m = detail::power_monotone(k, 1.0, eps);
    }
    return m;
  };

  return std::visit(
      [&](const auto& v) -> AnalyticModulus {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, fn::Linear>) {
          return linear(v.k);
        } else if constexpr (std::is_same_v<T, fn::OddPower>) {
          if (v.r == 1.0) return linear(v.k);
          return detail::power_monotone(v.k, v.r, eps);
        } else if constexpr (std::is_same_v<T, fn::LinearPlusPower>) {
          AnalyticModulus m;
          if (v.r == 1.0) {
            if (mono) return detail::power_monotone(v.k1 + v.k2, 1.0, eps);
            // Kink of size k2 at 0: the extremal g follows a chord above the kink.
            m.exponent = 2.0 / 3.0;
            m.value = std::cbrt(0.75 * v.k2) * std::pow(eps, m.exponent);
            m.eps_max = v.k2 / std::sqrt(48.0);
            return m;
          }
          m.asymptotic = true;
          if (mono) {
            m = detail::power_monotone(v.k1, 1.0, eps);
            m.asymptotic = true;
            m.eps_max = std::numeric_limits<double>::infinity();
            return m;
          }
          m.exponent = 2.0 * v.r / (2.0 * v.r + 1.0);
          return m;
        } else if constexpr (std::is_same_v<T, fn::Square>) {
          AnalyticModulus m;
          m.exponent = 0.8;
          m.value = std::pow(15.0, 0.4) / 2.0 * std::pow(eps, 0.8);
          // The extremal g is linear on |t| <= sqrt(2 omega); that support must fit in [-1/2, 1/2].
          m.eps_max = std::pow(0.125 * 2.0 / std::pow(15.0, 0.4), 1.25);
          return m;
        } else {
          throw DomainError("modulus_analytic: no closed form for " + q.f.name());
        }
      },
      q.f.variant());
}

/// As modulus_analytic_raw, but rejects eps outside the window.
inline AnalyticModulus modulus_analytic(const ModulusQuery& q) {
  AnalyticModulus m = modulus_analytic_raw(q);
  if (q.eps > m.eps_max) {
    throw DomainError("modulus_analytic: eps = " + std::to_string(q.eps) + " outside the validity window (eps <= " +
                      std::to_string(m.eps_max) + ")");
  }
  return m;
}

struct NumericOptions {
  std::size_t grid_size = 1025;
  bool graded = true;          // nodes concentrated near t0
  double grading_power = 2.0;
  double rel_tol = 1e-9;       // bisection on a
  bool via_ipm = false;        // general interior-point solver instead of PAVA / active set
  IpmOptions ipm;
};

struct NumericModulus {
  double value = 0.0;
  double raise = 0.0;  // largest admissible g(t0) - f(t0)
  double lower = 0.0;  // largest admissible f(t0) - g(t0)
  int solves = 0;
};

/// Discretised modulus: the smallest distance from f to the class subject to
/// g(t0) = f(t0) +- a is found by an exact cone projection, then inverted in a
/// by bisection.
class ModulusOracle {
 public:
  ModulusOracle(const FunctionSpec& f, ShapeClass cls, double t0, NumericOptions opt = {})
      : cls_(cls), opt_(opt) {
    check_interior(t0);
    if (!f.classify().contains(cls)) {
      throw DomainError("modulus_numeric: " + f.name() + " is not in the " + to_string(cls) + " class");
    }
    grid_ = opt.graded ? make_graded_grid(opt.grid_size, t0, opt.grading_power) : make_uniform_grid(opt.grid_size, t0);
    fv_.resize(grid_.t.size());
    for (std::size_t i = 0; i < fv_.size(); ++i) fv_[i] = f.evaluate(grid_.t[i]);
    if (opt.via_ipm) rows_ = cls == ShapeClass::Convex ? convex_rows(grid_.t) : monotone_rows(grid_.t);
  }

  /// min ||g - f|| over the class with g(t0) = f(t0) + shift.
  double min_norm(double shift) const {
    ++solves_;
    const double v = fv_[grid_.pin] + shift;
    Projection p;
    if (opt_.via_ipm) {
      p = project_cone_pinned(fv_, grid_.w, rows_, grid_.pin, v, opt_.ipm);
    } else if (cls_ == ShapeClass::Convex) {
      p = project_convex_pinned(grid_.t, fv_, grid_.w, grid_.pin, v);
    } else {
      p = project_monotone_pinned(fv_, grid_.w, grid_.pin, v);
    }
    return std::sqrt(p.squared_norm);
  }

  /// Largest a >= 0 with min_norm(sign * a) <= eps.
  double invert(double eps, double sign) const {
    double lo = 0.0;
    double hi = eps;
    int grow = 0;
    while (min_norm(sign * hi) <= eps) {
      lo = hi;
      hi *= 2.0;
      if (++grow > 80) throw ConvergenceError("modulus_numeric: min-norm does not grow with a");
    }
    while (hi - lo > opt_.rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (min_norm(sign * mid) <= eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  NumericModulus modulus(double eps) const {
    if (!(eps > 0.0)) throw DomainError("modulus_numeric: eps must be positive");
    solves_ = 0;
    NumericModulus m;
    m.raise = invert(eps, 1.0);
    m.lower = invert(eps, -1.0);
    m.value = std::max(m.raise, m.lower);
    m.solves = solves_;
    return m;
  }

  const Grid& grid() const { return grid_; }

 private:
  ShapeClass cls_;
  NumericOptions opt_;
  Grid grid_;
  std::vector<double> fv_;
  std::vector<BandedRow> rows_;
  mutable int solves_ = 0;
};

inline NumericModulus modulus_numeric(const ModulusQuery& q, const NumericOptions& opt = {}) {
  detail::check_query(q);
  return ModulusOracle(q.f, q.cls, q.t0, opt).modulus(q.eps);
}

inline NumericModulus modulus_numeric(const ModulusQuery& q, std::size_t grid_size) {
  NumericOptions opt;
  opt.grid_size = grid_size;
  return modulus_numeric(q, opt);
}

// ------------------------------------------------------------------------
// Lower bounds on the minimax expected length at f.

inline void check_bound_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.2)) throw DomainError("lower bound requires 0 < alpha <= 0.2");
}

/// 1 - 1/(sqrt(2 pi) z_a).
inline double lower_bound_factor(double alpha) {
  return 1.0 - 1.0 / (std::sqrt(2.0 * std::numbers::pi) * z_upper(alpha));
}

struct ModulusBound {
  double simple = 0.0;  // (1 - 1/(sqrt(2 pi) z)) omega
  double full = 0.0;    // simple + (phi(z)/z - alpha) omega
  double omega = 0.0;
  std::string source;   // "analytic" or "numeric"
};

/// Modulus-based bound at eps = z_a / sqrt(n). Uses the closed form when it is
/// exact and eps lies in its window, otherwise the numeric oracle.
inline ModulusBound lower_bound_thm1(const FunctionSpec& f, ShapeClass cls, long n, double alpha,
                                     const NumericOptions& opt = {}) {
  check_alpha(alpha);
  if (n < 1) throw DomainError("lower_bound_thm1: n must be positive");
  const double z = z_upper(alpha);
  const ModulusQuery q{f, cls, z / std::sqrt(static_cast<double>(n)), 0.0};
  ModulusBound b;
  std::optional<double> omega;
  try {
    const AnalyticModulus a = modulus_analytic(q);
    if (a.value && !a.asymptotic) omega = a.value;
  } catch (const DomainError&) {
  }
  if (omega) {
    b.source = "analytic";
  } else {
    omega = modulus_numeric(q, opt).value;
    b.source = "numeric";
  }
  b.omega = *omega;
  b.simple = lower_bound_factor(alpha) * b.omega;
  b.full = b.simple + (normal_pdf(z) / z - alpha) * b.omega;
  return b;
}

/// (1 - 1/(sqrt(2 pi) z_a)) z_a sigma_{j*} / sqrt2 over the monotone class.
inline double lower_bound_thm3(const FunctionSpec& f, long n, double alpha, double t0 = 0.0) {
  check_bound_alpha(alpha);
  if (!f.classify().monotone) throw DomainError("lower_bound_thm3: f is not monotone");
  const JStar js = j_star_m(f, n, alpha, t0);
  return lower_bound_factor(alpha) * z_upper(alpha) * js.sigma / std::numbers::sqrt2;
}

/// (1 - 1/(sqrt(2 pi) z_a)) (sqrt2/3) z_a sigma_{j*} over the convex class.
inline double lower_bound_thm5(const FunctionSpec& f, long n, double alpha, double t0 = 0.0) {
  check_bound_alpha(alpha);
  if (!f.classify().convex) throw DomainError("lower_bound_thm5: f is not convex");
  const JStar js = j_star_c(f, n, alpha, t0);
  return lower_bound_factor(alpha) * z_upper(alpha) * js.sigma * std::numbers::sqrt2 / 3.0;
}

/// Length cap of the adaptive interval in units of z_a sigma_{j*}.
inline double upper_constant(ShapeClass cls, double alpha) {
  const double z = z_upper(alpha);
  return (cls == ShapeClass::Monotone ? monotone_length_cap(alpha, 1.0) : convex_length_cap(alpha, 1.0)) / z;
}

/// Cap divided by the sigma_{j*} lower bound: the worst-case ratio to the optimum.
inline double ratio_constant(ShapeClass cls, double alpha) {
  const double lb_unit = lower_bound_factor(alpha) *
                         (cls == ShapeClass::Monotone ? 1.0 / std::numbers::sqrt2 : std::numbers::sqrt2 / 3.0);
  return upper_constant(cls, alpha) / lb_unit;
}

struct BenchmarkReport {
  std::string function;
  ShapeClass cls = ShapeClass::Monotone;
  long n = 0;
  double alpha = 0.0;
  int j_star = 0;
  double sigma_jstar = 0.0;
  double omega = 0.0;
  double lb_thm1_simple = 0.0;
  double lb_thm1_full = 0.0;
  double lb_thm3or5 = 0.0;
  double upper_cap = 0.0;
  double mc_length = std::numeric_limits<double>::quiet_NaN();

  double ratio() const { return mc_length / lb_thm3or5; }
};

/// Everything but the Monte Carlo length, which the caller fills in.
inline BenchmarkReport make_benchmark(const FunctionSpec& f, ShapeClass cls, long n, double alpha,
                                      const NumericOptions& opt = {}) {
  BenchmarkReport r;
  r.function = f.name();
  r.cls = cls;
  r.n = n;
  r.alpha = alpha;
  const JStar js = cls == ShapeClass::Monotone ? j_star_m(f, n, alpha) : j_star_c(f, n, alpha);
  r.j_star = js.j;
  r.sigma_jstar = js.sigma;
  const ModulusBound b = lower_bound_thm1(f, cls, n, alpha, opt);
  r.omega = b.omega;
  r.lb_thm1_simple = b.simple;
  r.lb_thm1_full = b.full;
  r.lb_thm3or5 = cls == ShapeClass::Monotone ? lower_bound_thm3(f, n, alpha) : lower_bound_thm5(f, n, alpha);
  r.upper_cap = cls == ShapeClass::Monotone ? monotone_length_cap(alpha, js.sigma) : convex_length_cap(alpha, js.sigma);
  return r;
}

inline constexpr const char* kBenchmarkCsvHeader =
    "function,class,n,alpha,j_star,sigma_jstar,omega,lb_thm1_simple,lb_thm1_full,lb_thm3or5,mc_length,ratio";

inline void write_benchmark_row(std::ostream& os, const BenchmarkReport& r) {
  const auto old = os.precision(10);
  os << '"' << r.function << '"' << ',' << to_string(r.cls) << ',' << r.n << ',' << r.alpha << ',' << r.j_star << ','
     << r.sigma_jstar << ',' << r.omega << ',' << r.lb_thm1_simple << ',' << r.lb_thm1_full << ',' << r.lb_thm3or5
     << ',' << r.mc_length << ',' << r.ratio() << '\n';
  os.precision(old);
}

}  // namespace shapeci
