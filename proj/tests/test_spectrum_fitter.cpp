// Tests for the least-squares engine and the transmission-spectrum fits.
// Synthetic spectra are generated from the forward model of the circuit
// module, so round trips check the fitter against known ground truth.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "muxread/circuit_model.hpp"
#include "muxread/detail/optim.hpp"
#include "muxread/detail/rng.hpp"
#include "muxread/spectrum_fitter.hpp"
#include "muxread/units.hpp"

namespace {

using muxread::FeedlineSpec;
using muxread::QubitState;
using muxread::ReadoutChain;
using muxread::SpectrumData;

FeedlineSpec feedline_40ff() {
  FeedlineSpec f;
  f.Z0 = 50.0;
  f.C_in = 40e-15;
  return f;
}

ReadoutChain chain_r6() {
  ReadoutChain c;
  c.name = "R6";
  c.omega_R = muxread::rad_from_ghz(6.898);
  c.J = muxread::rad_from_mhz(8.7);
  c.chi = muxread::rad_from_mhz(-2.66);
  auto bare = muxread::bare_filter_params_from_effective(
      feedline_40ff(), muxread::rad_from_ghz(6.898),
      muxread::rad_from_mhz(38.3));
  c.omega_P_bare = bare.first;
  c.kappa_P_bare = bare.second;
  return c;
}

SpectrumData synth_spectrum(const ReadoutChain& c, const FeedlineSpec& f,
                            QubitState state, std::size_t n_points,
                            double noise_sigma = 0.0,
                            std::uint64_t seed = 0) {
  auto eff = muxread::effective_filter_params(c, f);
  double span = 3.0 * eff.kappa_P_eff;
  SpectrumData d;
  d.frequency.resize(n_points);
  d.magnitude.resize(n_points);
  muxread::detail::Rng rng(seed, 77);
  for (std::size_t i = 0; i < n_points; ++i) {
    double w = eff.omega_P_eff - span +
               2.0 * span * static_cast<double>(i) /
                   static_cast<double>(n_points - 1);
    d.frequency[i] = w;
    d.magnitude[i] = std::abs(muxread::s21_normalized(c, f, w, state));
    if (noise_sigma > 0.0) d.magnitude[i] += noise_sigma * rng.normal();
  }
  return d;
}

TEST(LeastSquares, SolvesLinearProblemToMachinePrecision) {
  // y = 2 + 3 x on five points; residual is linear in the parameters, so LM
  // lands on the exact optimum almost immediately.
  std::vector<double> xs{-2.0, -1.0, 0.0, 1.0, 2.0};
  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      r[i] = p[0] + p[1] * xs[i] - (2.0 + 3.0 * xs[i]);
  };
  auto res = muxread::detail::fit_least_squares(residuals, xs.size(),
                                                {0.0, 0.0}, {false, false});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.params[0], 2.0, 1e-10);
  EXPECT_NEAR(res.params[1], 3.0, 1e-10);
  EXPECT_LT(res.chi2, 1e-18);
}

TEST(LeastSquares, RosenbrockValleyConverges) {
  auto residuals = [](const std::vector<double>& p, std::vector<double>& r) {
    r[0] = 10.0 * (p[1] - p[0] * p[0]);
    r[1] = 1.0 - p[0];
  };
  auto res = muxread::detail::fit_least_squares(residuals, 2, {-1.2, 1.0},
                                                {false, false});
  EXPECT_NEAR(res.params[0], 1.0, 1e-6);
  EXPECT_NEAR(res.params[1], 1.0, 1e-6);
}

TEST(LeastSquares, CovarianceMatchesLinearRegressionFormula) {
  // Straight-line fit with known noise: compare against (X^T X)^-1 sigma^2.
  std::size_t n = 400;
  muxread::detail::Rng rng(12, 9);
  double sigma = 0.1;
  std::vector<double> xs(n), ys(n);
  double sx = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    ys[i] = 1.5 - 0.8 * xs[i] + sigma * rng.normal();
    sx += xs[i];
    sxx += xs[i] * xs[i];
  }
  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    for (std::size_t i = 0; i < n; ++i) r[i] = p[0] + p[1] * xs[i] - ys[i];
  };
  auto res = muxread::detail::fit_least_squares(residuals, n, {0.0, 0.0},
                                                {false, false});
  double nn = static_cast<double>(n);
  double det = nn * sxx - sx * sx;
  double var_slope = sigma * sigma * nn / det;
  EXPECT_NEAR(res.covariance[1 * 2 + 1] / var_slope, 1.0, 0.3);
  EXPECT_NEAR(res.params[1], -0.8, 4.0 * std::sqrt(var_slope));
}

TEST(LeastSquares, PositiveParametersStayPositive) {
  // Fit an exponential decay rate from its own samples; the rate parameter
  // is log-transformed and must survive a deliberately bad start.
  std::vector<double> ts{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    for (std::size_t i = 0; i < ts.size(); ++i)
      r[i] = std::exp(-p[0] * ts[i]) - std::exp(-0.7 * ts[i]);
  };
  auto res = muxread::detail::fit_least_squares(residuals, ts.size(), {3.0},
                                                {true});
  EXPECT_NEAR(res.params[0], 0.7, 1e-8);
  EXPECT_GT(res.params[0], 0.0);
}

TEST(SpectrumFit, NoiselessRoundTripRecoversEffectiveParameters) {
  ReadoutChain c = chain_r6();
  FeedlineSpec f = feedline_40ff();
  auto eff = muxread::effective_filter_params(c, f);
  SpectrumData d = synth_spectrum(c, f, QubitState::ground, 801);

  auto fit = muxread::fit_s21(d, f);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.omega_P_eff / eff.omega_P_eff, 1.0, 1e-9);
  EXPECT_NEAR(fit.kappa_P_eff / eff.kappa_P_eff, 1.0, 1e-6);
  double w_res = muxread::dressed_resonator_freq(c, QubitState::ground);
  EXPECT_NEAR(fit.omega_R / w_res, 1.0, 1e-9);
  EXPECT_NEAR(fit.J / c.J, 1.0, 1e-6);
  EXPECT_NEAR(fit.amplitude, 1.0, 1e-6);
  EXPECT_NEAR(fit.offset, 0.0, 1e-6);
  EXPECT_LT(fit.chi2, 1e-12);

  double kR_truth = muxread::effective_readout_linewidth(
      eff.kappa_P_eff, c.J, eff.omega_P_eff - w_res);
  EXPECT_NEAR(fit.kappa_R() / kR_truth, 1.0, 1e-5);
}

TEST(SpectrumFit, AffineRescalingIsAbsorbedByNuisanceParameters) {
  ReadoutChain c = chain_r6();
  FeedlineSpec f = feedline_40ff();
  SpectrumData d = synth_spectrum(c, f, QubitState::ground, 601);
  for (double& m : d.magnitude) m = 0.7 * m + 0.1;

  auto fit = muxread::fit_s21(d, f);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.amplitude, 0.7, 1e-6);
  EXPECT_NEAR(fit.offset, 0.1, 1e-6);
  auto eff = muxread::effective_filter_params(c, f);
  EXPECT_NEAR(fit.omega_P_eff / eff.omega_P_eff, 1.0, 1e-9);
  EXPECT_NEAR(fit.kappa_P_eff / eff.kappa_P_eff, 1.0, 1e-6);
  EXPECT_NEAR(fit.J / c.J, 1.0, 1e-6);
}

TEST(SpectrumFit, NoisyFitStaysWithinQuotedUncertainty) {
  ReadoutChain c = chain_r6();
  FeedlineSpec f = feedline_40ff();
  auto eff = muxread::effective_filter_params(c, f);
  SpectrumData d = synth_spectrum(c, f, QubitState::ground, 801, 0.004, 314);

  auto fit = muxread::fit_s21(d, f);
  EXPECT_TRUE(fit.converged);
  EXPECT_GT(fit.sigma_J, 0.0);
  EXPECT_NEAR(fit.omega_P_eff, eff.omega_P_eff, 5.0 * fit.sigma_omega_P_eff);
  EXPECT_NEAR(fit.kappa_P_eff, eff.kappa_P_eff, 5.0 * fit.sigma_kappa_P_eff);
  EXPECT_NEAR(fit.J, c.J, 5.0 * fit.sigma_J);

  // Quadrupling the point count at fixed noise halves the uncertainty.
  SpectrumData d4 = synth_spectrum(c, f, QubitState::ground, 3201, 0.004, 314);
  auto fit4 = muxread::fit_s21(d4, f);
  double ratio = fit4.sigma_J / fit.sigma_J;
  EXPECT_GT(ratio, 0.3);
  EXPECT_LT(ratio, 0.8);
}

TEST(SpectrumFit, JointDispersiveFitRecoversChi) {
  ReadoutChain c = chain_r6();
  FeedlineSpec f = feedline_40ff();
  SpectrumData dg = synth_spectrum(c, f, QubitState::ground, 801);
  SpectrumData de = synth_spectrum(c, f, QubitState::excited, 801);

  auto fit = muxread::fit_dispersive_shift(dg, de, f);
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.chi, 0.0);
  EXPECT_NEAR(fit.chi / c.chi, 1.0, 1e-4);
  EXPECT_NEAR(fit.omega_R() / c.omega_R, 1.0, 1e-9);
  auto eff = muxread::effective_filter_params(c, f);
  EXPECT_NEAR(fit.kappa_P_eff / eff.kappa_P_eff, 1.0, 1e-6);
  EXPECT_NEAR(fit.J / c.J, 1.0, 1e-6);
  EXPECT_LT(fit.sigma_chi, std::abs(c.chi));
}

TEST(SpectrumFit, GuessAnchorsOnTheDipAndWindow) {
  ReadoutChain c = chain_r6();
  FeedlineSpec f = feedline_40ff();
  auto eff = muxread::effective_filter_params(c, f);
  SpectrumData d = synth_spectrum(c, f, QubitState::ground, 801);
  auto g = muxread::initial_guess_from_spectrum(d);
  EXPECT_NEAR(g.omega_P_eff, eff.omega_P_eff, eff.kappa_P_eff);
  EXPECT_NEAR(g.kappa_P_eff / eff.kappa_P_eff, 1.0, 0.6);
  EXPECT_NEAR(g.omega_R, c.omega_R, 0.3 * eff.kappa_P_eff);
  EXPECT_GT(g.J, c.J / 3.0);
  EXPECT_LT(g.J, c.J * 3.0);
}

TEST(SpectrumFit, RejectsFeaturelessOrMalformedData) {
  SpectrumData flat;
  for (int i = 0; i < 64; ++i) {
    flat.frequency.push_back(muxread::rad_from_ghz(6.8 + 1e-4 * i));
    flat.magnitude.push_back(1.0);
  }
  EXPECT_THROW(muxread::initial_guess_from_spectrum(flat),
               muxread::invalid_input);

  SpectrumData tiny;
  tiny.frequency = {1.0, 2.0};
  tiny.magnitude = {1.0, 1.0};
  EXPECT_THROW(muxread::initial_guess_from_spectrum(tiny),
               muxread::invalid_input);

  SpectrumData mismatch;
  mismatch.frequency.assign(64, 1.0);
  mismatch.magnitude.assign(32, 1.0);
  EXPECT_THROW(muxread::initial_guess_from_spectrum(mismatch),
               muxread::invalid_input);

  SpectrumData unsorted = flat;
  unsorted.magnitude[10] = 0.2;  // now there is a dip...
  std::swap(unsorted.frequency[3], unsorted.frequency[4]);  // ...but bad order
  EXPECT_THROW(muxread::initial_guess_from_spectrum(unsorted),
               muxread::invalid_input);
}

}  // namespace
