#pragma once

// Safeguarded scalar root finding for increasing functions: Illinois
// (modified regula falsi) steps with a bisection fallback when the bracket
// stops shrinking.

#include <cmath>
#include <utility>

#include "emp/errors.hpp"

namespace emp {

struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Root of an increasing f on [lo, hi] with f(lo) <= 0 <= f(hi).
/// Stops when the bracket is narrower than xtol or f vanishes.
template <class F>
RootResult find_root_increasing(F&& f, double lo, double hi, double flo, double fhi, double xtol,
                                int max_iter = 200) {
  if (flo > 0.0 || fhi < 0.0) throw PreconditionError("root bracket does not straddle zero");
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  int side = 0;  // which end was retained last: -1 lo, +1 hi
  double width = hi - lo;
  for (int it = 1; it <= max_iter; ++it) {
    double x = hi - fhi * (hi - lo) / (fhi - flo);
    if (!(x > lo && x < hi) || it % 4 == 0) x = 0.5 * (lo + hi);
    if (!(x > lo && x < hi)) {
      // the bracket is down to adjacent doubles
      return std::fabs(flo) < std::fabs(fhi) ? RootResult{lo, flo, it} : RootResult{hi, fhi, it};
    }
    const double fx = f(x);
    if (fx == 0.0) return {x, 0.0, it};
    if (fx < 0.0) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (hi - lo <= xtol) {
      const double m = 0.5 * (lo + hi);
      return {m, f(m), it};
    }
    if (it % 4 == 3) {
      if (hi - lo > 0.5 * width) side = 0;
      width = hi - lo;
    }
  }
  throw BudgetError("root finder exhausted " + std::to_string(max_iter) + " iterations (bracket [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "])");
}

}  // namespace emp
