#pragma once

#include <cmath>
#include <functional>

#include "muxread/errors.hpp"

namespace muxread::detail {

// Bracketed scalar root solve: bisection with a secant-accelerated midpoint
// (regula-falsi flavored).  Requires f(lo) and f(hi) of opposite sign.
// Converges to |hi-lo| <= rel_tol*|x| + abs_tol, then returns the midpoint.
template <typename F>
double find_root(F&& f, double lo, double hi, double rel_tol = 1e-14,
                 double abs_tol = 0.0, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw numerical_error("find_root: endpoints do not bracket a sign change");

  for (int it = 0; it < max_iter; ++it) {
    // Secant estimate, clamped to the central 80% of the bracket so a flat
    // function cannot stall progress; otherwise plain bisection.
    double mid = 0.5 * (lo + hi);
    double denom = fhi - flo;
    if (denom != 0.0) {
      double sec = lo - flo * (hi - lo) / denom;
      double lo_clip = lo + 0.1 * (hi - lo);
      double hi_clip = hi - 0.1 * (hi - lo);
      if (sec > lo_clip && sec < hi_clip) mid = sec;
    }
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
    if (hi - lo <= rel_tol * std::abs(0.5 * (lo + hi)) + abs_tol)
      return 0.5 * (lo + hi);
  }
  return 0.5 * (lo + hi);
}

}  // namespace muxread::detail
