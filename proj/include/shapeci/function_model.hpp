#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "shapeci/error.hpp"

namespace shapeci {

/// Constraint class: monotone nondecreasing or convex on [-1/2, 1/2].
enum class ShapeClass { Monotone, Convex };

inline const char* to_string(ShapeClass c) {
  return c == ShapeClass::Monotone ? "monotone" : "convex";
}

inline ShapeClass shape_class_from_string(const std::string& s) {
  if (s == "monotone" || s == "Monotone" || s == "m") return ShapeClass::Monotone;
  if (s == "convex" || s == "Convex" || s == "c") return ShapeClass::Convex;
  throw InputError("unknown shape class '" + s + "'");
}

/// Set of shape classes a function belongs to.
struct ShapeSet {
  bool monotone = false;
  bool convex = false;

  bool contains(ShapeClass c) const { return c == ShapeClass::Monotone ? monotone : convex; }
  bool operator==(const ShapeSet&) const = default;
};

inline constexpr double kHalf = 0.5;

namespace fn {

/// f(t) = k t
struct Linear {
  double k = 0.0;
};

/// f(t) = k1 t + k2 t^r 1{t > 0}
struct LinearPlusPower {
  double k1 = 0.0;
  double k2 = 1.0;
  double r = 1.0;
};

/// f(t) = k sign(t) |t|^r, r an odd integer or the reciprocal of one.
struct OddPower {
  double k = 1.0;
  double r = 1.0;
};

/// f(t) = t^2
struct Square {};

/// Linear interpolation of (knots, values); knots span [-1/2, 1/2].
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;
};

}  // namespace fn

/// Immutable description of a target function on [-1/2, 1/2] with closed-form
/// evaluation, antiderivative and shape classification.
class FunctionSpec {
 public:
  using Variant =
      std::variant<fn::Linear, fn::LinearPlusPower, fn::OddPower, fn::Square, fn::PiecewiseLinear>;

  static FunctionSpec linear(double k) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw DomainError("Linear: k must be >= 0");
    return FunctionSpec(fn::Linear{k});
  }

  static FunctionSpec linear_plus_power(double k1, double k2, double r) {
    if (!(k1 >= 0.0) || !(k2 > 0.0) || !(r >= 1.0) || !std::isfinite(k1 + k2 + r)) {
      throw DomainError("LinearPlusPower: need k1 >= 0, k2 > 0, r >= 1");
    }
    return FunctionSpec(fn::LinearPlusPower{k1, k2, r});
  }

  static FunctionSpec odd_power(double k, double r) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("OddPower: k must be > 0");
    if (!is_odd_integer(r) && !(r > 0.0 && is_odd_integer(1.0 / r))) {
      throw DomainError("OddPower: r must be 2l+1 or 1/(2l+1)");
    }
    return FunctionSpec(fn::OddPower{k, r});
  }

  static FunctionSpec square() { return FunctionSpec(fn::Square{}); }

  static FunctionSpec piecewise_linear(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size()) {
      throw DomainError("PiecewiseLinear: need >= 2 knots with matching values");
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i] > knots[i - 1])) throw DomainError("PiecewiseLinear: knots must increase");
    }
    if (std::fabs(knots.front() + kHalf) > 1e-12 || std::fabs(knots.back() - kHalf) > 1e-12) {
      throw DomainError("PiecewiseLinear: knots must cover [-1/2, 1/2]");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw DomainError("PiecewiseLinear: non-finite value");
    }
    knots.front() = -kHalf;
    knots.back() = kHalf;
    return FunctionSpec(fn::PiecewiseLinear{std::move(knots), std::move(values)});
  }

  const Variant& variant() const { return v_; }

  double operator()(double t) const { return evaluate(t); }

  double evaluate(double t) const {
    check_domain(t);
    return std::visit([t](const auto& f) { return eval_impl(f, t); }, v_);
  }

  /// Integral of f over [a, b] in closed form.
  double integrate(double a, double b) const {
    if (!(a <= b)) throw DomainError("integrate: need a <= b");
    check_domain(a);
    check_domain(b);
    return antiderivative(b) - antiderivative(a);
  }

  ShapeSet classify() const {
    return std::visit([](const auto& f) { return classify_impl(f); }, v_);
  }

  std::string name() const {
    return std::visit([](const auto& f) { return name_impl(f); }, v_);
  }

  nlohmann::json to_json() const;
  static FunctionSpec from_json(const nlohmann::json& j);

 private:
  explicit FunctionSpec(Variant v) : v_(std::move(v)) {}

  static bool is_odd_integer(double r) {
    const double rr = std::round(r);
    return r >= 1.0 && std::fabs(r - rr) < 1e-12 && static_cast<std::int64_t>(rr) % 2 == 1;
  }

  static void check_domain(double t) {
    if (!(t >= -kHalf && t <= kHalf)) throw DomainError("argument outside [-1/2, 1/2]");
  }

  static double signed_pow(double t, double r) {
    const double m = std::pow(std::fabs(t), r);
    return t < 0.0 ? -m : m;
  }

  static double eval_impl(const fn::Linear& f, double t) { return f.k * t; }
  static double eval_impl(const fn::LinearPlusPower& f, double t) {
    return f.k1 * t + (t > 0.0 ? f.k2 * std::pow(t, f.r) : 0.0);
  }
  static double eval_impl(const fn::OddPower& f, double t) { return f.k * signed_pow(t, f.r); }
  static double eval_impl(const fn::Square&, double t) { return t * t; }
  static double eval_impl(const fn::PiecewiseLinear& f, double t) {
    const auto i = segment(f, t);
    const double w = (t - f.knots[i]) / (f.knots[i + 1] - f.knots[i]);
    return f.values[i] + w * (f.values[i + 1] - f.values[i]);
  }

  static std::size_t segment(const fn::PiecewiseLinear& f, double t) {
    auto it = std::upper_bound(f.knots.begin(), f.knots.end(), t);
    auto i = static_cast<std::size_t>(std::distance(f.knots.begin(), it));
    return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, f.knots.size() - 2);
  }

  double antiderivative(double t) const {
    return std::visit(
        [t](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, fn::Linear>) {
            return 0.5 * f.k * t * t;
          } else if constexpr (std::is_same_v<F, fn::LinearPlusPower>) {
            const double tail = t > 0.0 ? f.k2 * std::pow(t, f.r + 1.0) / (f.r + 1.0) : 0.0;
            return 0.5 * f.k1 * t * t + tail;
          } else if constexpr (std::is_same_v<F, fn::OddPower>) {
            return f.k * std::pow(std::fabs(t), f.r + 1.0) / (f.r + 1.0);
          } else if constexpr (std::is_same_v<F, fn::Square>) {
            return t * t * t / 3.0;
          } else {
            // Exact trapezoid sums from the left end.
            const auto seg = segment(f, t);
            double acc = 0.0;
            for (std::size_t i = 0; i < seg; ++i) {
              acc += 0.5 * (f.values[i] + f.values[i + 1]) * (f.knots[i + 1] - f.knots[i]);
            }
            const double v = eval_impl(f, t);
            return acc + 0.5 * (f.values[seg] + v) * (t - f.knots[seg]);
          }
        },
        v_);
  }

  static ShapeSet classify_impl(const fn::Linear& f) { return {f.k >= 0.0, true}; }
  static ShapeSet classify_impl(const fn::LinearPlusPower&) { return {true, true}; }
  static ShapeSet classify_impl(const fn::OddPower& f) {
    return {true, std::fabs(f.r - 1.0) < 1e-12};
  }
  static ShapeSet classify_impl(const fn::Square&) { return {false, true}; }
  static ShapeSet classify_impl(const fn::PiecewiseLinear& f) {
    ShapeSet s{true, true};
    double prev = -INFINITY;
    for (std::size_t i = 0; i + 1 < f.knots.size(); ++i) {
      const double slope = (f.values[i + 1] - f.values[i]) / (f.knots[i + 1] - f.knots[i]);
      if (slope < -1e-12) s.monotone = false;
      if (slope < prev - 1e-9 * std::max(1.0, std::fabs(prev))) s.convex = false;
      prev = slope;
    }
    return s;
  }

  static std::string fmt(double x) {
    std::string s = std::to_string(x);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
  static std::string name_impl(const fn::Linear& f) { return "Linear(k=" + fmt(f.k) + ")"; }
  static std::string name_impl(const fn::LinearPlusPower& f) {
    return "LinearPlusPower(k1=" + fmt(f.k1) + ",k2=" + fmt(f.k2) + ",r=" + fmt(f.r) + ")";
  }
  static std::string name_impl(const fn::OddPower& f) {
    return "OddPower(k=" + fmt(f.k) + ",r=" + fmt(f.r) + ")";
  }
  static std::string name_impl(const fn::Square&) { return "Square"; }
  static std::string name_impl(const fn::PiecewiseLinear& f) {
    return "PiecewiseLinear(" + std::to_string(f.knots.size()) + " knots)";
  }

  Variant v_;
};

inline nlohmann::json FunctionSpec::to_json() const {
  using nlohmann::json;
  return std::visit(
      [](const auto& f) -> json {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, fn::Linear>) {
          return {{"variant", "Linear"}, {"params", {{"k", f.k}}}};
        } else if constexpr (std::is_same_v<F, fn::LinearPlusPower>) {
          return {{"variant", "LinearPlusPower"},
                  {"params", {{"k1", f.k1}, {"k2", f.k2}, {"r", f.r}}}};
        } else if constexpr (std::is_same_v<F, fn::OddPower>) {
          return {{"variant", "OddPower"}, {"params", {{"k", f.k}, {"r", f.r}}}};
        } else if constexpr (std::is_same_v<F, fn::Square>) {
          return {{"variant", "Square"}, {"params", json::object()}};
        } else {
          return {{"variant", "PiecewiseLinear"},
                  {"params", {{"knots", f.knots}, {"values", f.values}}}};
        }
      },
      v_);
}

inline FunctionSpec FunctionSpec::from_json(const nlohmann::json& j) {
  try {
    const auto variant = j.at("variant").get<std::string>();
    const auto params = j.contains("params") ? j.at("params") : nlohmann::json::object();
    if (variant == "Linear") return linear(params.at("k").get<double>());
    if (variant == "LinearPlusPower") {
      return linear_plus_power(params.at("k1").get<double>(), params.at("k2").get<double>(),
                               params.at("r").get<double>());
    }
    if (variant == "OddPower") {
      return odd_power(params.at("k").get<double>(), params.at("r").get<double>());
    }
    if (variant == "Square") return square();
    if (variant == "PiecewiseLinear") {
      return piecewise_linear(params.at("knots").get<std::vector<double>>(),
                              params.at("values").get<std::vector<double>>());
    }
    throw InputError("unknown function variant '" + variant + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed function spec: ") + e.what());
  }
}

}  // namespace shapeci
