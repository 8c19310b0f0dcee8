#pragma once

// Unit conventions used throughout the library.
//
// All internal quantities are SI: angular frequencies and rates in rad/s,
// times in seconds, capacitances in farads, impedances in ohms.  Human-facing
// boundaries (config files, CLI flags, CSV columns) use GHz for frequencies,
// MHz for rates and dispersive shifts, and ns for times; the helpers below
// are the only place conversions happen.

#include <cmath>

namespace muxread {

inline constexpr double two_pi = 6.283185307179586476925286766559;

constexpr double rad_from_ghz(double f_ghz) { return two_pi * f_ghz * 1e9; }
constexpr double rad_from_mhz(double f_mhz) { return two_pi * f_mhz * 1e6; }
constexpr double rad_from_hz(double f_hz) { return two_pi * f_hz; }

constexpr double ghz_from_rad(double w) { return w / (two_pi * 1e9); }
constexpr double mhz_from_rad(double w) { return w / (two_pi * 1e6); }
constexpr double hz_from_rad(double w) { return w / two_pi; }

constexpr double sec_from_ns(double t_ns) { return t_ns * 1e-9; }
constexpr double ns_from_sec(double t_s) { return t_s * 1e9; }

constexpr double farad_from_ff(double c_ff) { return c_ff * 1e-15; }
constexpr double ff_from_farad(double c_f) { return c_f * 1e15; }

constexpr double sec_from_us(double t_us) { return t_us * 1e-6; }
constexpr double us_from_sec(double t_s) { return t_s * 1e6; }

}  // namespace muxread
