#pragma once

// Fundamental-mode solver for a coplanar-waveguide readout resonator:
// a transmission line of length d, shorted at x = 0, loaded at the far end
// by a capacitance C0 to ground (qubit end) and tapped at x = x_c by a
// coupling capacitor C_c.
//
// The mode function is B*sin(kx) on the shorted segment and
// cos(k(x-d) - theta) on the loaded segment, with tan(theta) = C0*Z0*omega
// fixing the end-capacitor boundary condition.  Matching the two segments at
// the tap yields
//
//     cot(k x_c) + tan(k(x_c - d) - theta) = C_c * Z0 * omega .
//
// Both tangents blow up on the scan range, so the solver works with the
// pole-free form obtained by multiplying through by
// sin(k x_c) * cos(k(x_c-d) - theta):
//
//     R(omega) = cos(k d + theta)
//              - C_c Z0 omega * sin(k x_c) * cos(k(x_c-d) - theta) ,
//
// whose first positive zero is the fundamental.  theta is eliminated
// analytically (theta = atan(C0 Z0 omega)), and the search bracket is seeded
// at the unloaded quarter-wave frequency pi*v/(2d), which is an upper bound
// because capacitive loading only pulls the mode down.

#include <cmath>
#include <string>
#include <vector>

#include "muxread/detail/roots.hpp"
#include "muxread/errors.hpp"

namespace muxread {

struct QuarterWaveGeometry {
  double d = 0.0;        // resonator length, m
  double x_c = 0.0;      // tap position of the coupling capacitor, m
  double C0 = 0.0;       // end-loading capacitance, F
  double C_c = 0.0;      // tap coupling capacitance, F
  double ell = 0.0;      // inductance per unit length, H/m
  double cap = 0.0;      // capacitance per unit length, F/m

  double phase_velocity() const { return 1.0 / std::sqrt(ell * cap); }
  double line_impedance() const { return std::sqrt(ell / cap); }
  double unloaded_fundamental() const {
    return M_PI * phase_velocity() / (2.0 * d);
  }
};

struct ModeSolution {
  double omega = 0.0;           // fundamental angular frequency, rad/s
  double k = 0.0;               // wavenumber omega / v, 1/m
  double B = 0.0;               // shorted-segment amplitude ratio
  double theta = 0.0;           // end-capacitor phase, atan(C0 Z0 omega)
  double residual_matching = 0.0;  // tap equation residual (dimensionless)
  double residual_end = 0.0;       // end boundary residual, 0 by construction
};

namespace detail {

inline void validate_geometry(const QuarterWaveGeometry& g) {
  if (!(g.d > 0.0)) throw invalid_input("geometry: length must be positive");
  if (!(g.x_c > 0.0) || g.x_c > g.d)
    throw invalid_input("geometry: tap position must lie in (0, d]");
  if (!(g.ell > 0.0) || !(g.cap > 0.0))
    throw invalid_input("geometry: line parameters must be positive");
  if (g.C0 < 0.0 || g.C_c < 0.0)
    throw invalid_input("geometry: capacitances must be non-negative");
}

// Pole-free matching residual described above.
inline double scaled_residual(const QuarterWaveGeometry& g, double omega) {
  double v = g.phase_velocity();
  double Z0 = g.line_impedance();
  double k = omega / v;
  double theta = std::atan(g.C0 * Z0 * omega);
  return std::cos(k * g.d + theta) -
         g.C_c * Z0 * omega * std::sin(k * g.x_c) *
             std::cos(k * (g.x_c - g.d) - theta);
}

}  // namespace detail

// Fundamental mode of the loaded resonator.  rel_tol bounds the relative
// frequency error of the root solve (default well below the 1e-12 target).
inline ModeSolution solve_fundamental_mode(const QuarterWaveGeometry& g,
                                           double rel_tol = 1e-14) {
  detail::validate_geometry(g);

  // Walk upward from near zero to just above the unloaded quarter-wave
  // frequency; the residual starts at +1 (omega -> 0) and the first sign
  // change brackets the fundamental.
  double hi_limit = 1.05 * g.unloaded_fundamental();
  const int n_scan = 4096;
  double prev_w = hi_limit * 1e-6;
  double prev_r = detail::scaled_residual(g, prev_w);
  double lo = 0.0, hi = 0.0;
  for (int i = 1; i <= n_scan; ++i) {
    double w = hi_limit * (1e-6 + (1.0 - 1e-6) * i / n_scan);
    double r = detail::scaled_residual(g, w);
    if (r == 0.0 || (r > 0.0) != (prev_r > 0.0)) {
      lo = prev_w;
      hi = w;
      break;
    }
    prev_w = w;
    prev_r = r;
  }
  if (hi == 0.0)
    throw numerical_error("solve_fundamental_mode: no root below the unloaded "
                          "quarter-wave frequency");

  double omega = detail::find_root(
      [&](double w) { return detail::scaled_residual(g, w); }, lo, hi, rel_tol);

  ModeSolution sol;
  sol.omega = omega;
  double v = g.phase_velocity();
  double Z0 = g.line_impedance();
  sol.k = omega / v;
  sol.theta = std::atan(g.C0 * Z0 * omega);
  double open_arg = sol.k * (g.x_c - g.d) - sol.theta;
  double s = std::sin(sol.k * g.x_c);
  if (s == 0.0)
    throw numerical_error("solve_fundamental_mode: tap sits on a node");
  sol.B = std::cos(open_arg) / s;
  sol.residual_matching =
      1.0 / std::tan(sol.k * g.x_c) + std::tan(open_arg) - g.C_c * Z0 * omega;
  sol.residual_end = std::tan(sol.theta) - g.C0 * Z0 * omega;
  return sol;
}

// One row of a geometry design scan.
struct ScanRow {
  double value = 0.0;     // the swept parameter
  ModeSolution mode;      // valid when ok
  bool ok = false;
  std::string error;      // populated when !ok
};

enum class ScanParameter { length, tap_position, end_capacitance, tap_capacitance };

// Sweep one geometry parameter over [from, to] in n uniform points, solving
// the fundamental at each.  Rows that fail to solve carry the error message
// instead of aborting the whole table.
inline std::vector<ScanRow> design_scan(QuarterWaveGeometry base,
                                        ScanParameter param, double from,
                                        double to, int n) {
  if (n < 1) throw invalid_input("design_scan: need at least one point");
  if (n == 1 && from != to)
    throw invalid_input("design_scan: single-point scan requires from == to");
  std::vector<ScanRow> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double val = n == 1 ? from : from + (to - from) * i / (n - 1);
    QuarterWaveGeometry g = base;
    switch (param) {
      case ScanParameter::length: g.d = val; break;
      case ScanParameter::tap_position: g.x_c = val; break;
      case ScanParameter::end_capacitance: g.C0 = val; break;
      case ScanParameter::tap_capacitance: g.C_c = val; break;
    }
    rows[i].value = val;
    try {
      rows[i].mode = solve_fundamental_mode(g);
      rows[i].ok = true;
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  }
  return rows;
}

// Invert the design problem: find the length d whose loaded fundamental hits
// omega_target.  The tap position scales with d (fixed fractional tap).
inline double length_for_frequency(const QuarterWaveGeometry& base,
                                   double omega_target) {
  detail::validate_geometry(base);
  if (!(omega_target > 0.0))
    throw invalid_input("length_for_frequency: target must be positive");
  double frac = base.x_c / base.d;
  auto omega_of_d = [&](double d) {
    QuarterWaveGeometry g = base;
    g.d = d;
    g.x_c = frac * d;
    return solve_fundamental_mode(g).omega - omega_target;
  };
  // Unloaded length is a lower bound (loading lowers omega, so the loaded
  // resonator must be shorter to hit the same frequency).
  double d0 = M_PI * base.phase_velocity() / (2.0 * omega_target);
  double lo = 0.2 * d0, hi = 1.0001 * d0;
  double flo = omega_of_d(lo);
  double fhi = omega_of_d(hi);
  if ((flo > 0.0) == (fhi > 0.0))
    throw numerical_error("length_for_frequency: target outside bracket");
  return detail::find_root(omega_of_d, lo, hi, 1e-13);
}

}  // namespace muxread
