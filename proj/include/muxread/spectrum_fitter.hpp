#pragma once

// Extraction of chain parameters from measured (or simulated) transmission
// magnitude spectra.  Fits work directly in effective-parameter space
// (omega_P_eff, kappa_P_eff, omega_R, J) with an overall amplitude and a
// constant baseline as nuisance parameters; frequencies are rescaled
// internally so the normal equations stay well conditioned.

#include <algorithm>
#include <cmath>
#include <vector>

#include "muxread/circuit_model.hpp"
#include "muxread/detail/optim.hpp"
#include "muxread/errors.hpp"
#include "muxread/units.hpp"

namespace muxread {

// One magnitude spectrum: |S21/(1-Gamma)| sampled at angular frequencies.
struct SpectrumData {
  std::vector<double> frequency;  // rad/s
  std::vector<double> magnitude;
};

struct SpectrumGuess {
  double omega_P_eff = 0.0;
  double kappa_P_eff = 0.0;
  double omega_R = 0.0;
  double J = 0.0;
};

struct ChainFitResult {
  double omega_P_eff = 0.0;
  double kappa_P_eff = 0.0;
  double omega_R = 0.0;
  double J = 0.0;
  double amplitude = 1.0;
  double offset = 0.0;
  double sigma_omega_P_eff = 0.0;
  double sigma_kappa_P_eff = 0.0;
  double sigma_omega_R = 0.0;
  double sigma_J = 0.0;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;

  // Readout linewidth implied by the fitted parameters.
  double kappa_R() const {
    return effective_readout_linewidth(kappa_P_eff, J, omega_P_eff - omega_R);
  }
};

namespace detail {

// Internal frequency unit: one of these per 2*pi GHz keeps every fitted
// number within a few orders of magnitude of unity.
constexpr double spectrum_unit = 2.0 * 3.14159265358979323846 * 1e9;

inline void validate_spectrum(const SpectrumData& d, std::size_t min_points) {
  if (d.frequency.size() != d.magnitude.size())
    throw invalid_input("spectrum: frequency/magnitude size mismatch");
  if (d.frequency.size() < min_points)
    throw invalid_input("spectrum: too few points");
  for (double m : d.magnitude)
    if (!std::isfinite(m)) throw invalid_input("spectrum: non-finite value");
}

}  // namespace detail

// Starting point from the shape of the spectrum alone: the broad filter dip
// sets omega_P and kappa_P, the narrow window of restored transmission
// inside the dip sets omega_R, and its width sets J.  Throws if the data
// show no dip to anchor on.
inline SpectrumGuess initial_guess_from_spectrum(const SpectrumData& data) {
  detail::validate_spectrum(data, 32);
  const auto& f = data.frequency;
  const auto& y = data.magnitude;
  std::size_t n = f.size();
  for (std::size_t i = 1; i < n; ++i)
    if (!(f[i] > f[i - 1]))
      throw invalid_input("initial_guess: frequencies must increase");

  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  double baseline = sorted[static_cast<std::size_t>(0.9 * (n - 1))];
  std::size_t i_min = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (y[i] < y[i_min]) i_min = i;
  double depth = baseline - y[i_min];
  if (depth < 0.1 * std::max(baseline, 1e-12))
    throw invalid_input("initial_guess: no resonance dip in the spectrum");

  // Filter linewidth from the OUTERMOST half-depth crossings.  Walking from
  // the minimum would stop early at the narrow window of restored
  // transmission that the resonator opens inside the dip, so scan from the
  // edges instead; the transmission window then cannot truncate the width.
  double half = baseline - 0.5 * depth;
  std::size_t lo = 0;
  while (lo + 1 < n && y[lo] >= half) ++lo;
  std::size_t hi = n - 1;
  while (hi > 0 && y[hi] >= half) --hi;
  if (hi <= lo) {
    lo = i_min > 0 ? i_min - 1 : 0;
    hi = std::min(i_min + 1, n - 1);
  }
  double kappa_P = std::max(f[hi] - f[lo], 4.0 * (f[1] - f[0]));

  SpectrumGuess g;
  g.omega_P_eff = 0.5 * (f[lo] + f[hi]);
  g.kappa_P_eff = kappa_P;

  // Resonator window: the tallest local maximum strictly inside the dip.
  std::size_t i_peak = i_min;
  for (std::size_t i = lo + 1; i < hi; ++i)
    if (y[i] > y[i_peak] && y[i] > y[i - 1] && y[i] >= y[i + 1]) i_peak = i;

  if (i_peak != i_min && y[i_peak] > y[i_min] + 0.25 * depth) {
    g.omega_R = f[i_peak];
    // Width of the restored window at half its height above the dip floor.
    double mid = 0.5 * (y[i_peak] + y[i_min]);
    std::size_t a = i_peak, b = i_peak;
    while (a > lo && y[a] > mid) --a;
    while (b < hi && y[b] > mid) ++b;
    double kappa_R = std::max(f[b] - f[a], 2.0 * (f[1] - f[0]));
    g.J = 0.5 * std::sqrt(std::min(kappa_R, 0.5 * kappa_P) * kappa_P);
  } else {
    // No resolvable window: assume the resonator hides near the dip center.
    g.omega_R = f[i_min];
    g.J = kappa_P / 8.0;
  }
  return g;
}

namespace detail {

inline double model_magnitude(const FeedlineSpec& fl, double omega,
                              const std::vector<double>& p) {
  // p (internal units): omega_P, kappa_P, omega_R..., J, amplitude, offset.
  double wP = p[0] * spectrum_unit;
  double kP = p[1] * spectrum_unit;
  double wR = p[2] * spectrum_unit;
  double J = p[3] * spectrum_unit;
  return p[4] * std::abs(s21_effective(fl, omega, wP, kP, wR, J)) + p[5];
}

}  // namespace detail

inline ChainFitResult fit_s21(const SpectrumData& data, const FeedlineSpec& fl,
                              const SpectrumGuess& guess) {
  detail::validate_spectrum(data, 16);
  const double u = detail::spectrum_unit;
  std::size_t n = data.frequency.size();

  auto residuals = [&data, &fl](const std::vector<double>& p,
                                std::vector<double>& r) {
    for (std::size_t i = 0; i < data.frequency.size(); ++i)
      r[i] = detail::model_magnitude(fl, data.frequency[i], p) -
             data.magnitude[i];
  };

  std::vector<double> init{guess.omega_P_eff / u, guess.kappa_P_eff / u,
                           guess.omega_R / u, guess.J / u, 1.0, 0.0};
  std::vector<bool> log_scale{false, true, false, true, true, false};
  auto res = detail::fit_least_squares(residuals, n, init, log_scale);

  ChainFitResult out;
  out.omega_P_eff = res.params[0] * u;
  out.kappa_P_eff = res.params[1] * u;
  out.omega_R = res.params[2] * u;
  out.J = res.params[3] * u;
  out.amplitude = res.params[4];
  out.offset = res.params[5];
  auto sigma = [&](std::size_t k) {
    return std::sqrt(std::max(res.covariance[k * 6 + k], 0.0));
  };
  out.sigma_omega_P_eff = sigma(0) * u;
  out.sigma_kappa_P_eff = sigma(1) * u;
  out.sigma_omega_R = sigma(2) * u;
  out.sigma_J = sigma(3) * u;
  out.chi2 = res.chi2;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.used_fallback = res.used_fallback;
  return out;
}

inline ChainFitResult fit_s21(const SpectrumData& data,
                              const FeedlineSpec& fl) {
  return fit_s21(data, fl, initial_guess_from_spectrum(data));
}

// Joint fit of the two conditional spectra.  Filter parameters, coupling,
// amplitude and baseline are shared; only the resonator line moves with the
// qubit state.  chi is half the fitted line splitting, signed with the
// convention that the excited-state line sits at omega_R + chi.
struct DispersiveShiftFit {
  double omega_P_eff = 0.0;
  double kappa_P_eff = 0.0;
  double J = 0.0;
  double omega_R_ground = 0.0;
  double omega_R_excited = 0.0;
  double amplitude = 1.0;
  double offset = 0.0;
  double chi = 0.0;
  double sigma_chi = 0.0;
  double chi2 = 0.0;
  bool converged = false;
  bool used_fallback = false;

  double omega_R() const {
    return 0.5 * (omega_R_ground + omega_R_excited);
  }
};

inline DispersiveShiftFit fit_dispersive_shift(const SpectrumData& ground,
                                               const SpectrumData& excited,
                                               const FeedlineSpec& fl,
                                               const SpectrumGuess& guess) {
  detail::validate_spectrum(ground, 16);
  detail::validate_spectrum(excited, 16);
  const double u = detail::spectrum_unit;
  std::size_t ng = ground.frequency.size();
  std::size_t ne = excited.frequency.size();

  // Parameter layout: omega_P, kappa_P, omega_R_g, omega_R_e, J, A, B.
  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    std::vector<double> pg{p[0], p[1], p[2], p[4], p[5], p[6]};
    std::vector<double> pe{p[0], p[1], p[3], p[4], p[5], p[6]};
    for (std::size_t i = 0; i < ng; ++i)
      r[i] = detail::model_magnitude(fl, ground.frequency[i], pg) -
             ground.magnitude[i];
    for (std::size_t i = 0; i < ne; ++i)
      r[ng + i] = detail::model_magnitude(fl, excited.frequency[i], pe) -
                  excited.magnitude[i];
  };

  std::vector<double> init{guess.omega_P_eff / u, guess.kappa_P_eff / u,
                           guess.omega_R / u,     guess.omega_R / u,
                           guess.J / u,           1.0,
                           0.0};
  std::vector<bool> log_scale{false, true, false, false, true, true, false};
  auto res = detail::fit_least_squares(residuals, ng + ne, init, log_scale);

  DispersiveShiftFit out;
  out.omega_P_eff = res.params[0] * u;
  out.kappa_P_eff = res.params[1] * u;
  out.omega_R_ground = res.params[2] * u;
  out.omega_R_excited = res.params[3] * u;
  out.J = res.params[4] * u;
  out.amplitude = res.params[5];
  out.offset = res.params[6];
  out.chi = 0.5 * (out.omega_R_excited - out.omega_R_ground);
  double var_g = res.covariance[2 * 7 + 2];
  double var_e = res.covariance[3 * 7 + 3];
  double cov_ge = res.covariance[2 * 7 + 3];
  out.sigma_chi =
      0.5 * std::sqrt(std::max(var_g + var_e - 2.0 * cov_ge, 0.0)) * u;
  out.chi2 = res.chi2;
  out.converged = res.converged;
  out.used_fallback = res.used_fallback;
  return out;
}

inline DispersiveShiftFit fit_dispersive_shift(const SpectrumData& ground,
                                               const SpectrumData& excited,
                                               const FeedlineSpec& fl) {
  return fit_dispersive_shift(ground, excited, fl,
                              initial_guess_from_spectrum(ground));
}

}  // namespace muxread
