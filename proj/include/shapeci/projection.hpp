#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "shapeci/error.hpp"
#include "shapeci/function_model.hpp"

namespace shapeci {

/// Quadrature grid on [-1/2, 1/2] with trapezoid weights; `pin` is the node at
/// (or nearest to) the target point.
struct Grid {
  std::vector<double> t;
  std::vector<double> w;
  std::size_t pin = 0;
};

namespace detail {
inline void trapezoid_weights(Grid& g) {
  g.w.assign(g.t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < g.t.size(); ++i) {
    const double h = g.t[i + 1] - g.t[i];
    g.w[i] += 0.5 * h;
    g.w[i + 1] += 0.5 * h;
  }
}

inline void check_grid_size(std::size_t size) {
  if (size < 257 || size % 2 == 0) throw DomainError("grid size must be odd and >= 257");
}
}  // namespace detail

/// Uniform nodes; the pin is the node nearest t0.
inline Grid make_uniform_grid(std::size_t size, double t0 = 0.0) {
  detail::check_grid_size(size);
  Grid g;
  g.t.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    g.t[i] = -kHalf + static_cast<double>(i) / static_cast<double>(size - 1);
  }
  g.t.back() = kHalf;
  g.pin = static_cast<std::size_t>(std::lround((t0 + kHalf) * static_cast<double>(size - 1)));
  detail::trapezoid_weights(g);
  return g;
}

/// Nodes graded toward t0: on each side the k-th of m = (size-1)/2 nodes sits
/// at distance L (k/m)^power from t0, L being the room to the boundary.
/// t0 itself is a node.
inline Grid make_graded_grid(std::size_t size, double t0 = 0.0, double power = 2.0) {
  detail::check_grid_size(size);
  if (!(std::fabs(t0) < kHalf)) throw DomainError("graded grid: t0 must be interior");
  const std::size_t m = (size - 1) / 2;
  Grid g;
  g.t.resize(size);
  const double left = t0 + kHalf;
  const double right = kHalf - t0;
  for (std::size_t k = 0; k <= m; ++k) {
    const double u = std::pow(static_cast<double>(k) / static_cast<double>(m), power);
    g.t[m - k] = t0 - left * u;
    g.t[m + k] = t0 + right * u;
  }
  g.t.front() = -kHalf;
  g.t.back() = kHalf;
  g.pin = m;
  detail::trapezoid_weights(g);
  return g;
}

/// Weighted isotonic (nondecreasing) least-squares fit by pool-adjacent-violators.
inline std::vector<double> pava(const std::vector<double>& y, const std::vector<double>& w) {
  if (y.size() != w.size()) throw DomainError("pava: size mismatch");
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> stack;
  stack.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    stack.push_back({y[i], w[i], 1});
    while (stack.size() > 1 && stack[stack.size() - 2].mean >= stack.back().mean) {
      const Block top = stack.back();
      stack.pop_back();
      Block& prev = stack.back();
      const double wt = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / wt;
      prev.weight = wt;
      prev.count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : stack) out.insert(out.end(), b.count, b.mean);
  return out;
}

struct Projection {
  std::vector<double> g;
  /// sum_i w_i (g_i - f_i)^2, the trapezoid approximation of ||g - f||_2^2.
  double squared_norm = 0.0;
  int iterations = 0;
};

inline double weighted_squared_distance(const std::vector<double>& g, const std::vector<double>& f,
                                        const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) acc += w[i] * (g[i] - f[i]) * (g[i] - f[i]);
  return acc;
}

/// Closest nondecreasing g to f (weighted) with g[pin] = value. The pin splits
/// the problem into two isotonic fits clipped at the pinned value.
inline Projection project_monotone_pinned(const std::vector<double>& f, const std::vector<double>& w,
                                          std::size_t pin, double value) {
  const auto pin_it = static_cast<std::ptrdiff_t>(pin);
  std::vector<double> left(f.begin(), f.begin() + pin_it);
  std::vector<double> wl(w.begin(), w.begin() + pin_it);
  std::vector<double> right(f.begin() + pin_it + 1, f.end());
  std::vector<double> wr(w.begin() + pin_it + 1, w.end());
  Projection p;
  p.g.reserve(f.size());
  for (double v : pava(left, wl)) p.g.push_back(std::min(v, value));
  p.g.push_back(value);
  for (double v : pava(right, wr)) p.g.push_back(std::max(v, value));
  p.squared_norm = weighted_squared_distance(p.g, f, w);
  return p;
}

// ------------------------------------------------------------------------
// Exact convex projection with one node pinned. A convex g on the grid with
// g(t_pin) = 0 is a line through the pin plus nonnegative hinges at interior
// nodes, (t - t_k)_+ right of the pin and (t_k - t)_+ left of it, so the fit
// is a nonnegative least-squares problem in the hinge weights, solved by
// Lawson-Hanson. For a given knot set the fit is a linear spline, written in
// hat functions so each solve is tridiagonal and well conditioned.

namespace detail {

struct SplineFit {
  std::vector<double> u;     // fitted values at every node
  std::vector<double> jump;  // slope jump at each requested knot, in order
};

/// Weighted least-squares linear spline with knots {0, knots..., size-1} and
/// value 0 at the pin. `knots` is sorted, interior.
inline SplineFit fit_pinned_spline(const std::vector<double>& t, const std::vector<double>& y,
                                   const std::vector<double>& w, std::size_t pin, const std::vector<std::size_t>& knots) {
  const std::size_t size = t.size();
  std::vector<std::size_t> k;
  k.reserve(knots.size() + 2);
  k.push_back(0);
  k.insert(k.end(), knots.begin(), knots.end());
  k.push_back(size - 1);

  // Knot q enters the fit as coef[q] * x[var[q]]. A pin that is not a knot
  // ties its two neighbours into one unknown d: c_l = -theta d, c_r = (1-theta) d.
  const std::size_t nk = k.size();
  std::vector<std::ptrdiff_t> var(nk, -1);
  std::vector<double> coef(nk, 1.0);
  std::ptrdiff_t nv = 0;
  for (std::size_t q = 0; q < nk; ++q) {
    if (k[q] == pin) continue;
    if (q + 1 < nk && k[q] < pin && pin < k[q + 1]) {
      const double theta = (t[pin] - t[k[q]]) / (t[k[q + 1]] - t[k[q]]);
      var[q] = var[q + 1] = nv++;
      coef[q] = -theta;
      coef[q + 1] = 1.0 - theta;
      ++q;
      continue;
    }
    var[q] = nv++;
  }
  const auto n = static_cast<std::size_t>(nv);
  std::vector<double> diag(n, 0.0), off(n, 0.0), rhs(n, 0.0);
  auto accumulate = [&](std::size_t i, std::size_t q, double s) {
    // node i = (1 - s) knot q + s knot q+1
    std::array<std::ptrdiff_t, 2> v{var[q], var[q + 1]};
    std::array<double, 2> a{(1.0 - s) * coef[q], s * coef[q + 1]};
    if (v[0] == v[1]) {
      a[0] += a[1];
      v[1] = -1;
    }
    for (int p = 0; p < 2; ++p) {
      if (v[p] < 0) continue;
      const auto vp = static_cast<std::size_t>(v[p]);
      diag[vp] += w[i] * a[p] * a[p];
      rhs[vp] += w[i] * a[p] * y[i];
    }
    if (v[0] >= 0 && v[1] >= 0) off[static_cast<std::size_t>(std::min(v[0], v[1]))] += w[i] * a[0] * a[1];
  };
  for (std::size_t q = 0; q + 1 < nk; ++q) {
    const double span = t[k[q + 1]] - t[k[q]];
    const std::size_t last = q + 2 == nk ? k[q + 1] : k[q + 1] - 1;
    for (std::size_t i = k[q]; i <= last; ++i) accumulate(i, q, (t[i] - t[k[q]]) / span);
  }

  // Jacobi scaling, then the tridiagonal LDL^T sweep.
  std::vector<double> sc(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!(diag[v] > 0.0)) throw ConvergenceError("convex projection: empty spline basis function");
    sc[v] = 1.0 / std::sqrt(diag[v]);
  }
  std::vector<double> d(n), l(n, 0.0), x(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double o = v > 0 ? off[v - 1] * sc[v - 1] * sc[v] : 0.0;
    d[v] = 1.0 - (v > 0 ? o * l[v - 1] : 0.0);
    if (!(d[v] > 0.0)) throw ConvergenceError("convex projection: singular spline system");
    if (v + 1 < n) l[v] = off[v] * sc[v] * sc[v + 1] / d[v];
    x[v] = rhs[v] * sc[v] - (v > 0 ? l[v - 1] * x[v - 1] : 0.0);
  }
  for (std::size_t v = n; v-- > 0;) {
    x[v] /= d[v];
    if (v + 1 < n) x[v] -= l[v] * x[v + 1];
  }
  for (std::size_t v = 0; v < n; ++v) x[v] *= sc[v];

  std::vector<double> c(nk, 0.0);
  for (std::size_t q = 0; q < nk; ++q) {
    if (var[q] >= 0) c[q] = coef[q] * x[static_cast<std::size_t>(var[q])];
  }
  SplineFit fit;
  fit.u.assign(size, 0.0);
  for (std::size_t q = 0; q + 1 < nk; ++q) {
    const double span = t[k[q + 1]] - t[k[q]];
    for (std::size_t i = k[q]; i <= k[q + 1]; ++i) {
      const double s = (t[i] - t[k[q]]) / span;
      fit.u[i] = (1.0 - s) * c[q] + s * c[q + 1];
    }
  }
  fit.u[pin] = 0.0;
  fit.jump.resize(knots.size());
  for (std::size_t q = 1; q + 1 < nk; ++q) {
    const double right = (c[q + 1] - c[q]) / (t[k[q + 1]] - t[k[q]]);
    const double left = (c[q] - c[q - 1]) / (t[k[q]] - t[k[q - 1]]);
    fit.jump[q - 1] = right - left;
  }
  return fit;
}

}  // namespace detail

/// Closest convex g to f (weighted) with g[pin] = value, exact up to rounding.
inline Projection project_convex_pinned(const std::vector<double>& t, const std::vector<double>& f,
                                        const std::vector<double>& w, std::size_t pin, double value) {
  const std::size_t size = t.size();
  if (f.size() != size || w.size() != size || pin >= size || size < 3) {
    throw DomainError("project_convex_pinned: bad sizes");
  }
  for (std::size_t i = 0; i + 1 < size; ++i) {
    if (!(t[i] < t[i + 1])) throw DomainError("project_convex_pinned: nodes must increase");
  }
  std::vector<double> y(size), tau(size);
  double ynorm = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    y[i] = f[i] - value;
    tau[i] = t[i] - t[pin];
    ynorm += w[i] * y[i] * y[i];
  }
  // Below this the residual is rounding noise (f already in the cone).
  const double rnorm_floor = 1e-14 * std::sqrt(ynorm);

  // Hinge k (interior node) vanishes on the pin side of t_k. Inner products
  // with hinges come from prefix sums on each side of the pin.
  auto hinge_products = [&](const std::vector<double>& v, std::vector<double>& out) {
    out.assign(size, 0.0);
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = size - 1; i > pin; --i) {
      s0 += w[i] * v[i];
      s1 += w[i] * v[i] * tau[i];
      out[i - 1] = s1 - tau[i - 1] * s0;
    }
    s0 = s1 = 0.0;
    for (std::size_t i = 0; i + 1 < pin; ++i) {
      s0 += w[i] * v[i];
      s1 += w[i] * v[i] * tau[i];
      out[i + 1] = tau[i + 1] * s0 - s1;
    }
  };
  // ||h_k||^2, for the scale-free entry test.
  std::vector<double> hnorm(size, 0.0);
  {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = size - 1; i > pin; --i) {
      s0 += w[i];
      s1 += w[i] * tau[i];
      s2 += w[i] * tau[i] * tau[i];
      const double tk = tau[i - 1];
      hnorm[i - 1] = std::sqrt(std::max(0.0, s2 - 2.0 * tk * s1 + tk * tk * s0));
    }
    s0 = s1 = s2 = 0.0;
    for (std::size_t i = 0; i + 1 < pin; ++i) {
      s0 += w[i];
      s1 += w[i] * tau[i];
      s2 += w[i] * tau[i] * tau[i];
      const double tk = tau[i + 1];
      hnorm[i + 1] = std::sqrt(std::max(0.0, s2 - 2.0 * tk * s1 + tk * tk * s0));
    }
  }

  constexpr double kEntryTol = 1e-11;
  std::vector<std::size_t> active;  // sorted knots with positive weight
  std::vector<double> beta;         // their weights
  std::vector<char> banned(size, 0);
  detail::SplineFit fit = detail::fit_pinned_spline(t, y, w, pin, active);
  std::vector<double> r(size), grad;
  Projection out;
  const int max_outer = static_cast<int>(10 * size);
  for (int outer = 0;; ++outer) {
    if (outer >= max_outer) throw ConvergenceError("convex projection: active set did not settle");
    out.iterations = outer;
    double rnorm = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      r[i] = y[i] - fit.u[i];
      rnorm += w[i] * r[i] * r[i];
    }
    rnorm = std::sqrt(rnorm);
    if (rnorm <= rnorm_floor) break;
    hinge_products(r, grad);
    std::size_t entering = size;
    double best = kEntryTol * rnorm;
    for (std::size_t kk = 1; kk + 1 < size; ++kk) {
      if (banned[kk] || !(hnorm[kk] > 0.0)) continue;
      if (std::binary_search(active.begin(), active.end(), kk)) continue;
      const double g = grad[kk] / hnorm[kk];
      if (g > best) {
        best = g;
        entering = kk;
      }
    }
    if (entering == size) break;

    const auto pos = std::lower_bound(active.begin(), active.end(), entering) - active.begin();
    active.insert(active.begin() + pos, entering);
    beta.insert(beta.begin() + pos, 0.0);
    bool first = true;
    for (;;) {
      detail::SplineFit trial = detail::fit_pinned_spline(t, y, w, pin, active);
      const auto ipos = static_cast<std::size_t>(
          std::lower_bound(active.begin(), active.end(), entering) - active.begin());
      if (first && ipos < active.size() && active[ipos] == entering && !(trial.jump[ipos] > 0.0)) {
        // Rounding: the entering hinge does not help after all.
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(ipos));
        beta.erase(beta.begin() + static_cast<std::ptrdiff_t>(ipos));
        banned[entering] = 1;
        break;
      }
      first = false;
      double step = 1.0;
      std::size_t blocking = active.size();
      for (std::size_t q = 0; q < active.size(); ++q) {
        if (trial.jump[q] <= 0.0) {
          const double s = beta[q] / (beta[q] - trial.jump[q]);
          if (s < step) {
            step = s;
            blocking = q;
          }
        }
      }
      if (blocking == active.size()) {
        beta = trial.jump;
        fit = std::move(trial);
        std::fill(banned.begin(), banned.end(), 0);
        break;
      }
      std::vector<std::size_t> keep_k;
      std::vector<double> keep_b;
      for (std::size_t q = 0; q < active.size(); ++q) {
        const double b = beta[q] + step * (trial.jump[q] - beta[q]);
        if (q != blocking && b > 0.0) {
          keep_k.push_back(active[q]);
          keep_b.push_back(b);
        }
      }
      active = std::move(keep_k);
      beta = std::move(keep_b);
    }
  }

  out.g.resize(size);
  for (std::size_t i = 0; i < size; ++i) out.g[i] = value + fit.u[i];
  out.g[pin] = value;
  out.squared_norm = weighted_squared_distance(out.g, f, w);
  return out;
}

// ------------------------------------------------------------------------
// Interior-point projection onto a polyhedral cone {g : A g >= 0} with one
// coordinate pinned. Every constraint row touches at most three consecutive
// coordinates, so the Newton systems are pentadiagonal and cost O(size).
// General but less robust than the class-specific solvers above, which the
// modulus oracle uses by default; kept as an independent cross-check.

/// Constraint row: sum_k coef[k] * g[first + k] >= 0.
struct BandedRow {
  std::size_t first = 0;
  std::array<double, 3> coef{0.0, 0.0, 0.0};
  int width = 0;
};

/// g_{i+1} - g_i >= 0.
inline std::vector<BandedRow> monotone_rows(const std::vector<double>& t) {
  std::vector<BandedRow> rows;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) rows.push_back({i, {-1.0, 1.0, 0.0}, 2});
  return rows;
}

/// Slopes nondecreasing: (g_{i+1}-g_i)/h_i - (g_i-g_{i-1})/h_{i-1} >= 0.
inline std::vector<BandedRow> convex_rows(const std::vector<double>& t) {
  std::vector<BandedRow> rows;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double hl = t[i] - t[i - 1];
    const double hr = t[i + 1] - t[i];
    rows.push_back({i - 1, {1.0 / hl, -1.0 / hl - 1.0 / hr, 1.0 / hr}, 3});
  }
  return rows;
}

struct IpmOptions {
  double tolerance = 1e-8;       // relative primal and dual residuals
  double gap_tolerance = 1e-9;   // duality gap relative to the objective
  int max_iterations = 200;
  int stall_iterations = 8;      // give up this long after the last improvement
  double accept_factor = 100.0;  // a stalled run is accepted within this multiple of the tolerances
};

namespace detail {

/// Symmetric positive definite matrix with two off-diagonals, factored LDL^T.
class Pentadiagonal {
 public:
  explicit Pentadiagonal(std::size_t n) : d0_(n, 0.0), d1_(n, 0.0), d2_(n, 0.0) {}

  void add(std::size_t i, std::size_t j, double v) {
    if (i < j) std::swap(i, j);
    switch (i - j) {
      case 0: d0_[i] += v; break;
      case 1: d1_[j] += v; break;
      case 2: d2_[j] += v; break;
      default: throw Error("Pentadiagonal: entry outside band");
    }
  }

  // In place; afterwards d0_ holds D and d1_, d2_ hold the unit-lower factor.
  // A pivot lost to cancellation (huge barrier weights next to tiny ones) is
  // replaced by a huge value, which zeroes that component of the step.
  void factor() {
    const std::size_t n = d0_.size();
    for (std::size_t i = 0; i < n; ++i) {
      double di = d0_[i];
      if (i >= 1) di -= d1_[i - 1] * d1_[i - 1] * d0_[i - 1];
      if (i >= 2) di -= d2_[i - 2] * d2_[i - 2] * d0_[i - 2];
      if (!std::isfinite(di)) throw ConvergenceError("interior point: non-finite Newton pivot");
      if (!(di > 1e-14 * d0_[i])) di = 1e64;
      d0_[i] = di;
      if (i + 1 < n) {
        double l1 = d1_[i];
        if (i >= 1) l1 -= d2_[i - 1] * d1_[i - 1] * d0_[i - 1];
        d1_[i] = l1 / di;
      }
      if (i + 2 < n) d2_[i] = d2_[i] / di;
    }
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = d0_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= 1) b[i] -= d1_[i - 1] * b[i - 1];
      if (i >= 2) b[i] -= d2_[i - 2] * b[i - 2];
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= d0_[i];
    for (std::size_t i = n; i-- > 0;) {
      if (i + 1 < n) b[i] -= d1_[i] * b[i + 1];
      if (i + 2 < n) b[i] -= d2_[i] * b[i + 2];
    }
  }

 private:
  std::vector<double> d0_, d1_, d2_;
};

struct FreeRow {
  std::array<std::size_t, 3> idx{};
  std::array<double, 3> coef{};
  int width = 0;
  double rhs = 0.0;  // row . x >= rhs
};

}  // namespace detail

/// Closest g to f in the weighted norm subject to the cone rows and g[pin] = value,
/// by a Mehrotra predictor-corrector interior-point method.
inline Projection project_cone_pinned(const std::vector<double>& f, const std::vector<double>& w,
                                      const std::vector<BandedRow>& rows, std::size_t pin, double value,
                                      const IpmOptions& opt = {}) {
  const std::size_t size = f.size();
  if (w.size() != size || pin >= size || size < 3) throw DomainError("project_cone_pinned: bad sizes");
  const std::size_t nx = size - 1;
  auto free_index = [pin](std::size_t i) { return i < pin ? i : i - 1; };

  // Work in y = sqrt(2 w / mean w) x so the quadratic term is the identity;
  // the graded grids spread the weights over several decades.
  const double wscale = static_cast<double>(size) / std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> scale_x(nx), q2(nx, 1.0), target(nx);
  for (std::size_t i = 0; i < size; ++i) {
    if (i == pin) continue;
    scale_x[free_index(i)] = std::sqrt(2.0 * w[i] * wscale);
    target[free_index(i)] = scale_x[free_index(i)] * f[i];
  }

  // Rows in free coordinates, normalised to unit length.
  std::vector<detail::FreeRow> a;
  a.reserve(rows.size());
  for (const auto& r : rows) {
    detail::FreeRow fr;
    for (int k = 0; k < r.width; ++k) {
      const std::size_t i = r.first + static_cast<std::size_t>(k);
      const double c = r.coef[static_cast<std::size_t>(k)];
      if (i == pin) {
        fr.rhs -= c * value;
      } else {
        fr.idx[static_cast<std::size_t>(fr.width)] = free_index(i);
        fr.coef[static_cast<std::size_t>(fr.width)] = c / scale_x[free_index(i)];
        ++fr.width;
      }
    }
    if (fr.width == 0) {
      if (fr.rhs > 0.0) throw DomainError("project_cone_pinned: infeasible constraint");
      continue;
    }
    double norm = 0.0;
    for (int k = 0; k < fr.width; ++k) norm += fr.coef[static_cast<std::size_t>(k)] * fr.coef[static_cast<std::size_t>(k)];
    norm = std::sqrt(norm);
    for (int k = 0; k < fr.width; ++k) fr.coef[static_cast<std::size_t>(k)] /= norm;
    fr.rhs /= norm;
    a.push_back(fr);
  }
  const std::size_t m = a.size();

  auto mul_a = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      for (int k = 0; k < a[r].width; ++k) acc += a[r].coef[static_cast<std::size_t>(k)] * x[a[r].idx[static_cast<std::size_t>(k)]];
      out[r] = acc;
    }
  };
  auto mul_at = [&](const std::vector<double>& y, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (int k = 0; k < a[r].width; ++k) out[a[r].idx[static_cast<std::size_t>(k)]] += a[r].coef[static_cast<std::size_t>(k)] * y[r];
    }
  };

  std::vector<double> x = target;
  std::vector<double> s(m, 1.0), lam(m, 1.0);
  {
    std::vector<double> ax(m);
    mul_a(x, ax);
    for (std::size_t r = 0; r < m; ++r) s[r] = std::max(ax[r] - a[r].rhs, 1.0);
  }

  std::vector<double> ax(m), atl(nx), rd(nx), rp(m), rhs(nx), dx(nx), ds(m), dl(m), tmp(m), adx(m);
  std::vector<double> dx_aff(nx), ds_aff(m), dl_aff(m);

  auto newton = [&](const std::vector<double>& rc, std::vector<double>& out_dx, std::vector<double>& out_ds,
                    std::vector<double>& out_dl) {
    detail::Pentadiagonal h(nx);
    for (std::size_t i = 0; i < nx; ++i) h.add(i, i, q2[i]);
    for (std::size_t r = 0; r < m; ++r) {
      const double d = lam[r] / s[r];
      for (int p = 0; p < a[r].width; ++p) {
        for (int q = 0; q <= p; ++q) {
          const auto ip = a[r].idx[static_cast<std::size_t>(p)];
          const auto iq = a[r].idx[static_cast<std::size_t>(q)];
          const double v = d * a[r].coef[static_cast<std::size_t>(p)] * a[r].coef[static_cast<std::size_t>(q)];
          h.add(ip, iq, v);
        }
      }
    }
    h.factor();
    // Reduced solve given dual and primal right-hand sides.
    auto reduced = [&](const std::vector<double>& r_d, const std::vector<double>& r_p, const std::vector<double>& r_c,
                       std::vector<double>& px, std::vector<double>& ps, std::vector<double>& pl) {
      for (std::size_t r = 0; r < m; ++r) tmp[r] = (lam[r] / s[r]) * r_p[r] + r_c[r] / s[r];
      mul_at(tmp, rhs);
      for (std::size_t i = 0; i < nx; ++i) rhs[i] = -r_d[i] - rhs[i];
      h.solve(rhs);
      px = rhs;
      mul_a(px, adx);
      for (std::size_t r = 0; r < m; ++r) {
        ps[r] = adx[r] + r_p[r];
        pl[r] = -(lam[r] / s[r]) * ps[r] - r_c[r] / s[r];
      }
    };
    reduced(rd, rp, rc, out_dx, out_ds, out_dl);
    // Iterative refinement on the dual equations, where the reduced system
    // loses accuracy once lambda/s is extreme.
    std::vector<double> e(nx), zero_m(m, 0.0), cx(nx), cs(m), cl(m);
    for (int pass = 0; pass < 2; ++pass) {
      mul_at(out_dl, e);
      for (std::size_t i = 0; i < nx; ++i) e[i] = q2[i] * out_dx[i] - e[i] + rd[i];
      reduced(e, zero_m, zero_m, cx, cs, cl);
      for (std::size_t i = 0; i < nx; ++i) out_dx[i] += cx[i];
      for (std::size_t r = 0; r < m; ++r) {
        out_ds[r] += cs[r];
        out_dl[r] += cl[r];
      }
    }
  };
  auto max_step = [](const std::vector<double>& v, const std::vector<double>& dv) {
    double step = 1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
    }
    return step;
  };

  // Absolute floor for the gap test: the optimum can be 0 (f already in the cone).
  double target_norm = 0.0;
  for (double v : target) target_norm += 0.5 * v * v;
  const double gap_floor = 1e-15 * (1.0 + target_norm);

  Projection out;
  double best_merit = std::numeric_limits<double>::infinity();
  int best_it = 0;
  std::vector<double> best_x = x;
  for (int it = 0; it < opt.max_iterations; ++it) {
    mul_a(x, ax);
    mul_at(lam, atl);
    for (std::size_t i = 0; i < nx; ++i) rd[i] = q2[i] * (x[i] - target[i]) - atl[i];
    for (std::size_t r = 0; r < m; ++r) rp[r] = ax[r] - s[r] - a[r].rhs;
    const double mu = m ? std::inner_product(lam.begin(), lam.end(), s.begin(), 0.0) / static_cast<double>(m) : 0.0;
    double rd_norm = 0.0, rp_norm = 0.0, d_scale = 0.0, p_scale = 0.0, obj = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      rd_norm = std::max(rd_norm, std::fabs(rd[i]));
      d_scale = std::max({d_scale, std::fabs(atl[i]), std::fabs(q2[i] * (x[i] - target[i]))});
      obj += 0.5 * q2[i] * (x[i] - target[i]) * (x[i] - target[i]);
    }
    for (std::size_t r = 0; r < m; ++r) {
      rp_norm = std::max(rp_norm, std::fabs(rp[r]));
      p_scale = std::max({p_scale, std::fabs(ax[r]), std::fabs(a[r].rhs)});
    }
    const double gap = mu * static_cast<double>(m);
    // Late iterations can lose the dual residual to rounding once the barrier
    // weights span many decades, so the best iterate so far is kept.
    const double merit = std::max({rd_norm / (opt.tolerance * (1.0 + d_scale)),
                                   rp_norm / (opt.tolerance * (1.0 + p_scale)),
                                   gap / (opt.gap_tolerance * obj + gap_floor)});
    if (merit < best_merit) {
      best_merit = merit;
      best_it = it;
      best_x = x;
    }
    if (merit <= 1.0) {
      out.iterations = it;
      break;
    }
    if (it - best_it >= opt.stall_iterations || it + 1 == opt.max_iterations) {
      if (best_merit <= opt.accept_factor) {
        x = best_x;
        out.iterations = it;
        break;
      }
      throw ConvergenceError("interior point stalled after " + std::to_string(it + 1) +
                             " iterations (best merit " + std::to_string(best_merit) + ")");
    }
    // Predictor.
    std::vector<double> rc(m);
    for (std::size_t r = 0; r < m; ++r) rc[r] = lam[r] * s[r];
    newton(rc, dx_aff, ds_aff, dl_aff);
    const double a_aff = std::min(max_step(s, ds_aff), max_step(lam, dl_aff));
    double mu_aff = 0.0;
    for (std::size_t r = 0; r < m; ++r) mu_aff += (s[r] + a_aff * ds_aff[r]) * (lam[r] + a_aff * dl_aff[r]);
    mu_aff /= static_cast<double>(std::max<std::size_t>(m, 1));
    const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3.0) : 0.0;
    // Corrector.
    for (std::size_t r = 0; r < m; ++r) rc[r] = lam[r] * s[r] + ds_aff[r] * dl_aff[r] - sigma * mu;
    newton(rc, dx, ds, dl);
    // One step length for both: with a quadratic objective the dual residual
    // depends on x as well as lambda.
    const double step = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(lam, dl)));
    for (std::size_t i = 0; i < nx; ++i) x[i] += step * dx[i];
    for (std::size_t r = 0; r < m; ++r) {
      s[r] += step * ds[r];
      lam[r] += step * dl[r];
    }
    out.iterations = it + 1;
  }

  out.g.resize(size);
  for (std::size_t i = 0; i < size; ++i) out.g[i] = i == pin ? value : x[free_index(i)] / scale_x[free_index(i)];
  out.squared_norm = weighted_squared_distance(out.g, f, w);
  return out;
}

}  // namespace shapeci
