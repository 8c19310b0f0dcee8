#pragma once

// Linearized circuit model of one multiplexed-readout chain: a readout
// resonator (mode b) coupled with strength J to a dedicated Purcell filter
// (mode a), which couples to a shared feedline through an input capacitor.
//
// The input capacitor acts as a weakly transmitting mirror.  Its reflection
// coefficient renormalizes the filter: the usable filter linewidth and the
// filter frequency are both shifted by the reflected field.  All formulas
// below work with those renormalized ("effective") filter parameters; the
// reflection coefficient is evaluated once at the bare filter frequency and
// treated as constant per chain, since it varies on the GHz scale while the
// modes respond on the MHz scale.

#include <complex>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "muxread/errors.hpp"
#include "muxread/units.hpp"

namespace muxread {

using cplx = std::complex<double>;

// Shared feedline: characteristic impedance and the input coupling capacitor
// that terminates it at the chain side.
struct FeedlineSpec {
  double Z0 = 50.0;    // ohm
  double C_in = 0.0;   // farad; 0 means an ideal short (full reflection)
};

// One readout chain.  Frequencies/rates are angular (rad/s), times seconds.
// omega_P_bare / kappa_P_bare are the filter parameters before feedline
// renormalization; fitted spectroscopy values are effective ones and can be
// converted with bare_filter_params_from_effective().
struct ReadoutChain {
  std::string name;
  double omega_R = 0.0;        // readout resonator frequency
  double omega_P_bare = 0.0;   // bare Purcell filter frequency
  double kappa_P_bare = 0.0;   // bare filter linewidth into the feedline
  double J = 0.0;              // resonator-filter coupling
  double chi = 0.0;            // dispersive shift (signed, typically < 0)
  double kappa_b = 0.0;        // direct resonator decay (weak drive port)
  double gamma_a = 0.0;        // internal filter loss
  double gamma_b = 0.0;        // internal resonator loss
  double g = 0.0;              // qubit-resonator coupling
  double omega_Q = 0.0;        // qubit frequency
  double T1 = 0.0;             // qubit relaxation time, s
  double P_therm = 0.0;        // thermal excited-state population
};

struct EffectiveChainParams {
  double omega_P_eff = 0.0;
  double kappa_P_eff = 0.0;
};

enum class QubitState { ground, excited };

// Reflection coefficient of the feedline termination seen from the filter,
// Gamma = 1 / (1 + 2i*omega*Z0*C_in).  C_in = 0 is special-cased to exactly
// 1 so that the no-capacitor limit stays free of rounding artifacts.
inline cplx reflection_coefficient(const FeedlineSpec& fl, double omega) {
  if (fl.C_in == 0.0) return cplx(1.0, 0.0);
  return 1.0 / cplx(1.0, 2.0 * omega * fl.Z0 * fl.C_in);
}

// Fraction of the filter emission routed toward the output port,
// (1 + |Gamma|^2) / 2.  Approaches 1 for small C_in (mirror-like capacitor).
inline double directionality(const FeedlineSpec& fl, double omega) {
  double m = std::abs(reflection_coefficient(fl, omega));
  return 0.5 * (1.0 + m * m);
}

// Renormalized filter parameters: kappa_eff = kappa_bare*(1+Re Gamma)/2 and
// omega_eff = omega_bare + kappa_bare*Im(Gamma)/4, with Gamma evaluated at
// the bare filter frequency.
inline EffectiveChainParams effective_filter_params(const ReadoutChain& chain,
                                                    const FeedlineSpec& fl) {
  cplx gamma = reflection_coefficient(fl, chain.omega_P_bare);
  EffectiveChainParams out;
  out.kappa_P_eff = chain.kappa_P_bare * 0.5 * (1.0 + gamma.real());
  out.omega_P_eff = chain.omega_P_bare + 0.25 * chain.kappa_P_bare * gamma.imag();
  return out;
}

// Inverse of effective_filter_params: recover bare filter parameters from
// fitted (effective) ones.  Gamma varies slowly, so a short fixed-point
// iteration converges to double precision in a few rounds.
inline std::pair<double, double> bare_filter_params_from_effective(
    const FeedlineSpec& fl, double omega_eff, double kappa_eff) {
  double omega_bare = omega_eff;
  double kappa_bare = kappa_eff;
  for (int i = 0; i < 8; ++i) {
    cplx gamma = reflection_coefficient(fl, omega_bare);
    kappa_bare = 2.0 * kappa_eff / (1.0 + gamma.real());
    omega_bare = omega_eff - 0.25 * kappa_bare * gamma.imag();
  }
  return {omega_bare, kappa_bare};
}

// Resonator frequency dressed by the qubit state: omega_R - chi for ground,
// omega_R + chi for excited (chi carries its sign).
inline double dressed_resonator_freq(const ReadoutChain& chain, QubitState s) {
  return s == QubitState::ground ? chain.omega_R - chain.chi
                                 : chain.omega_R + chain.chi;
}

// Effective linewidth of the resonator-like mode of the coupled pair:
//   kappa_R = (kappa_eff - Re sqrt(-16 J^2 + (kappa_eff - 2i*delta_ab)^2)) / 2
// with delta_ab = omega_P_eff - omega_R and the principal-branch square root.
// This is the slower of the two hybridized decay rates and satisfies
// 0 <= kappa_R <= kappa_eff / 2.
inline double effective_readout_linewidth(double kappa_P_eff, double J,
                                          double delta_ab) {
  cplx z = cplx(kappa_P_eff, -2.0 * delta_ab);
  cplx s = std::sqrt(-16.0 * J * J + z * z);
  return 0.5 * (kappa_P_eff - s.real());
}

inline double effective_readout_linewidth(const ReadoutChain& chain,
                                          const FeedlineSpec& fl) {
  EffectiveChainParams eff = effective_filter_params(chain, fl);
  return effective_readout_linewidth(eff.kappa_P_eff, chain.J,
                                     eff.omega_P_eff - chain.omega_R);
}

// Weak-coupling approximation of the same quantity,
// kappa_R ~ 4 J^2 kappa_eff / (kappa_eff^2 + 4 delta_ab^2); accurate when
// 4J << kappa_eff and useful as a design rule of thumb.
inline double approx_readout_linewidth(double kappa_P_eff, double J,
                                       double delta_ab) {
  return 4.0 * J * J * kappa_P_eff /
         (kappa_P_eff * kappa_P_eff + 4.0 * delta_ab * delta_ab);
}

namespace detail {

// Coefficients of the linear two-mode equations of motion in the frame
// rotating at the drive frequency:
//   da/dt = (-i*delta_a - (kappa_eff+gamma_a)/2) a - iJ b + drive_a * u(t)
//   db/dt = (-i*delta_b - (kappa_b +gamma_b)/2) b - iJ a
// drive_a folds in the input coupling sqrt(kappa_bare)/2 * (1 - Gamma),
// with Gamma frozen at the bare filter frequency (constant per chain) so the
// input coupling does not leak frequency dependence into detuning scans.
struct TwoModeSystem {
  Eigen::Matrix2cd M;
  Eigen::Vector2cd drive;
};

inline TwoModeSystem two_mode_system(const ReadoutChain& chain,
                                     const FeedlineSpec& fl, double omega_d,
                                     QubitState state) {
  EffectiveChainParams eff = effective_filter_params(chain, fl);
  double delta_a = eff.omega_P_eff - omega_d;
  double delta_b = dressed_resonator_freq(chain, state) - omega_d;
  cplx gamma = reflection_coefficient(fl, chain.omega_P_bare);

  TwoModeSystem sys;
  const cplx I(0.0, 1.0);
  sys.M(0, 0) = -I * delta_a - 0.5 * (eff.kappa_P_eff + chain.gamma_a);
  sys.M(0, 1) = -I * chain.J;
  sys.M(1, 0) = -I * chain.J;
  sys.M(1, 1) = -I * delta_b - 0.5 * (chain.kappa_b + chain.gamma_b);
  sys.drive(0) = 0.5 * std::sqrt(chain.kappa_P_bare) * (1.0 - gamma);
  sys.drive(1) = cplx(0.0, 0.0);
  return sys;
}

}  // namespace detail

// Steady intra-resonator fields (a, b) under a continuous drive of the given
// amplitude (sqrt(photon flux) units) at omega_d.
inline Eigen::Vector2cd steady_state_fields(const ReadoutChain& chain,
                                            const FeedlineSpec& fl,
                                            double omega_d, double amplitude,
                                            QubitState state) {
  detail::TwoModeSystem sys = detail::two_mode_system(chain, fl, omega_d, state);
  cplx det = sys.M(0, 0) * sys.M(1, 1) - sys.M(0, 1) * sys.M(1, 0);
  double scale = std::max({std::abs(sys.M(0, 0)), std::abs(sys.M(1, 1)),
                           std::abs(sys.M(0, 1)), 1.0});
  if (std::abs(det) < 1e-12 * scale * scale)
    throw numerical_error("steady_state_fields: undamped system is singular");
  // Solve M x = -drive*amplitude by Cramer's rule.
  Eigen::Vector2cd rhs = -amplitude * sys.drive;
  Eigen::Vector2cd x;
  x(0) = (rhs(0) * sys.M(1, 1) - sys.M(0, 1) * rhs(1)) / det;
  x(1) = (sys.M(0, 0) * rhs(1) - rhs(0) * sys.M(1, 0)) / det;
  return x;
}

// Steady resonator photon number |b|^2 for the filtered (two-mode) chain.
// Falls off as detuning^-4 far from resonance: the filter steepens the
// response skirt by an extra factor of detuning^-2.
inline double steady_state_photon(const ReadoutChain& chain,
                                  const FeedlineSpec& fl, double omega_d,
                                  double amplitude,
                                  QubitState state = QubitState::ground) {
  return std::norm(steady_state_fields(chain, fl, omega_d, amplitude, state)(1));
}

// Reference single-mode model: resonator with linewidth kappa_R coupled
// straight to the line; photon number falls off as detuning^-2 only.
inline double steady_state_photon_single_mode(double kappa_R, double omega_R,
                                              double omega_d,
                                              double amplitude) {
  double delta = omega_R - omega_d;
  double denom = delta * delta + 0.25 * kappa_R * kappa_R;
  if (denom == 0.0)
    throw numerical_error("steady_state_photon_single_mode: undamped resonance");
  return kappa_R * amplitude * amplitude / denom;
}

namespace detail {

// Core of the normalized transmission formula in terms of the effective
// filter parameters and the (dressed) resonator line.  Shared between the
// physical-chain wrapper below and the spectrum fitter, which works directly
// in effective-parameter space.
inline cplx s21_effective(const FeedlineSpec& fl, double omega_d,
                          double omega_P_eff, double kappa_P_eff,
                          double omega_res, double J, double kappa_b = 0.0,
                          double gamma_a = 0.0, double gamma_b = 0.0) {
  cplx gamma = reflection_coefficient(fl, omega_d);
  const cplx I(0.0, 1.0);
  cplx za = gamma_a + 2.0 * I * (omega_P_eff - omega_d) + kappa_P_eff;
  cplx zb = gamma_b + 2.0 * I * (omega_res - omega_d) + kappa_b;
  cplx denom = 4.0 * J * J + za * zb;
  return 1.0 - (1.0 + gamma) / (1.0 + gamma.real()) * (kappa_P_eff * zb) / denom;
}

}  // namespace detail

// Normalized feedline transmission past one chain, S21/(1-Gamma).  The drive
// probes at omega_d; the resonator line is dressed by the qubit state.
// Wide filter dip with a narrow resonator window of restored transmission.
inline cplx s21_normalized(const ReadoutChain& chain, const FeedlineSpec& fl,
                           double omega_d, QubitState state) {
  EffectiveChainParams eff = effective_filter_params(chain, fl);
  return detail::s21_effective(fl, omega_d, eff.omega_P_eff, eff.kappa_P_eff,
                               dressed_resonator_freq(chain, state), chain.J,
                               chain.kappa_b, chain.gamma_a, chain.gamma_b);
}

// Transmission from the feedline into the weak resonator drive port.
// Peaks at the dressed resonator frequency; vanishes for J = 0.
inline cplx s23(const ReadoutChain& chain, const FeedlineSpec& fl,
                double omega_d, QubitState state) {
  EffectiveChainParams eff = effective_filter_params(chain, fl);
  cplx gamma = reflection_coefficient(fl, omega_d);
  const cplx I(0.0, 1.0);
  cplx za = chain.gamma_a + 2.0 * I * (eff.omega_P_eff - omega_d) + eff.kappa_P_eff;
  cplx zb = chain.gamma_b + 2.0 * I * (dressed_resonator_freq(chain, state) - omega_d) +
            chain.kappa_b;
  cplx denom = 4.0 * chain.J * chain.J + za * zb;
  return (1.0 + gamma) / std::sqrt(2.0 * (1.0 + gamma.real())) * 4.0 * I *
         chain.J * std::sqrt(chain.kappa_P_bare) * std::sqrt(chain.kappa_b) / denom;
}

// Purcell-limited qubit T1 from the decay rate of the qubit-like eigenmode
// of the coupled linear system.
//
// with_filter = false: qubit + resonator, the resonator carrying the full
// effective linewidth kappa_R (a readout resonator wired straight to the
// line).  with_filter = true: qubit + resonator + filter, where the only
// fast decay is the filter's; the qubit inherits it through two off-resonant
// couplings, which is the protection the filter buys.
//
// delta_q is the qubit-resonator detuning (omega_Q - omega_R).  Throws if
// the qubit-like eigenvector cannot be identified unambiguously (hybridized
// modes near resonance).
inline double purcell_t1_limit(const ReadoutChain& chain, const FeedlineSpec& fl,
                               double delta_q, bool with_filter) {
  if (chain.g == 0.0) return std::numeric_limits<double>::infinity();

  const cplx I(0.0, 1.0);
  Eigen::MatrixXcd M;
  if (with_filter) {
    EffectiveChainParams eff = effective_filter_params(chain, fl);
    double delta_ab = eff.omega_P_eff - chain.omega_R;
    M = Eigen::MatrixXcd::Zero(3, 3);
    M(0, 0) = -I * delta_q;
    M(0, 1) = -I * chain.g;
    M(1, 0) = -I * chain.g;
    M(1, 1) = -0.5 * (chain.kappa_b + chain.gamma_b);
    M(1, 2) = -I * chain.J;
    M(2, 1) = -I * chain.J;
    M(2, 2) = -I * delta_ab - 0.5 * (eff.kappa_P_eff + chain.gamma_a);
  } else {
    double kappa_R = effective_readout_linewidth(chain, fl);
    M = Eigen::MatrixXcd::Zero(2, 2);
    M(0, 0) = -I * delta_q;
    M(0, 1) = -I * chain.g;
    M(1, 0) = -I * chain.g;
    M(1, 1) = -0.5 * (kappa_R + chain.gamma_b);
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(M);
  if (solver.info() != Eigen::Success)
    throw numerical_error("purcell_t1_limit: eigensolver failed");

  // The qubit-like mode is the eigenvector with the largest weight on the
  // qubit component; demand a clear winner.
  int best = -1;
  double best_w = -1.0, second_w = -1.0;
  for (int k = 0; k < M.rows(); ++k) {
    double w = std::norm(solver.eigenvectors()(0, k));
    if (w > best_w) {
      second_w = best_w;
      best_w = w;
      best = k;
    } else if (w > second_w) {
      second_w = w;
    }
  }
  if (best_w < 1.1 * second_w)
    throw numerical_error(
        "purcell_t1_limit: modes too hybridized to identify the qubit");

  double decay = -2.0 * solver.eigenvalues()(best).real();
  if (decay <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / decay;
}

// Critical photon number of the dispersive approximation,
// n_crit = delta_q^2 / (4 g^2).
inline double critical_photon_number(double g, double omega_Q, double omega_R) {
  double delta = omega_Q - omega_R;
  if (delta == 0.0)
    throw invalid_input("critical_photon_number: zero qubit-resonator detuning");
  if (g == 0.0)
    throw invalid_input("critical_photon_number: zero coupling");
  return delta * delta / (4.0 * g * g);
}

}  // namespace muxread
