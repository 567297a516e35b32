#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "nvsense/errors.hpp"

namespace nvsense {

struct BisectionOptions {
  double relative_tolerance = 1e-12;  // on the abscissa, relative to |hi|
  std::size_t max_iterations = 200;
};

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign
/// (or one of them be zero). Stops when the bracket is narrower than the
/// tolerance or cannot be split any further. Throws NoRootError otherwise.
template <class F>
double bisect(F&& f, double lo, double hi, const BisectionOptions& options = {}) {
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (std::signbit(f_lo) == std::signbit(f_hi)) {
    throw NoRootError("bisection bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] has no sign change");
  }
  for (std::size_t i = 0; i < options.max_iterations; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= options.relative_tolerance * std::abs(hi)) break;
  }
  return lo + 0.5 * (hi - lo);
}

}  // namespace nvsense
