#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>

#include "shapeci/error.hpp"

namespace shapeci {

/// Closed interval, or the distinguished empty interval (length 0) produced
/// when a computed lower endpoint exceeds the upper one.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool empty = false;

  /// [lo, hi], collapsed to empty when lo > hi.
  static Interval from_endpoints(double lo, double hi) {
    if (lo > hi) return Interval{lo, hi, true};
    return Interval{lo, hi, false};
  }

  double length() const { return empty ? 0.0 : upper - lower; }

  /// The empty interval covers nothing.
  bool contains(double x) const { return !empty && lower <= x && x <= upper; }
};

inline std::ostream& operator<<(std::ostream& os, const Interval& ci) {
  if (ci.empty) return os << "empty";
  return os << '[' << ci.lower << ", " << ci.upper << ']';
}

/// Result of a first-passage (or max-rule) level selection.
struct LevelChoice {
  int j = 0;
  /// No level satisfied the rule and the cap was used instead.
  bool truncated = false;
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw DomainError("alpha must lie in (0, 1/2)");
  }
}

}  // namespace shapeci
