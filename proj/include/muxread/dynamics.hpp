#pragma once

// Time-domain response of a filter/resonator chain to a readout pulse.
//
// The coupled-mode equations are linear with a time-dependent drive, so each
// integration step uses the exact propagator of the (constant) system matrix
// and treats the drive envelope as constant across the step, sampled at the
// midpoint.  That makes the stepper unconditionally stable and exact for
// square pulses whose edges sit on the grid; otherwise the only
// discretization error is the envelope's variation within a step, which is
// negligible for nanosecond filters at the default 0.1 ns grid.

#include <cmath>
#include <complex>
#include <vector>

#include "muxread/circuit_model.hpp"
#include "muxread/errors.hpp"

namespace muxread {

enum class PulseShape {
  square,                  // hard-edged rectangle
  gaussian_filtered_square // rectangle convolved with a Gaussian response
};

struct PulseSpec {
  PulseShape shape = PulseShape::square;
  double amplitude = 0.0;  // drive field amplitude, sqrt(photons/s)
  double t_start = 0.0;    // nominal leading edge, s
  double duration = 0.0;   // nominal flat-top length, s
  double sigma = 0.0;      // Gaussian filter width, s (filtered shape only)
};

// Drive envelope at time t.  The filtered shape is the exact convolution of
// the rectangle with a unit-area Gaussian, so its flat-top value approaches
// the square amplitude once duration >> sigma.
inline double pulse_envelope(const PulseSpec& p, double t) {
  switch (p.shape) {
    case PulseShape::square:
      return (t >= p.t_start && t < p.t_start + p.duration) ? p.amplitude
                                                            : 0.0;
    case PulseShape::gaussian_filtered_square: {
      if (!(p.sigma > 0.0))
        throw invalid_input("pulse_envelope: filtered shape needs sigma > 0");
      double s = std::sqrt(2.0) * p.sigma;
      return 0.5 * p.amplitude *
             (std::erf((t - p.t_start) / s) -
              std::erf((t - p.t_start - p.duration) / s));
    }
  }
  throw invalid_input("pulse_envelope: unknown shape");
}

// Sampled filter (a) and resonator (b) fields on a uniform grid, plus the
// drive envelope that produced them.  Sample i sits at time i * dt; both
// modes start empty.
struct FieldTrace {
  double dt = 0.0;
  std::vector<cplx> a;
  std::vector<cplx> b;
  std::vector<double> drive;

  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
  std::size_t size() const { return a.size(); }
};

namespace detail {

// Exact exponential of a 2x2 complex matrix: with mu = tr(M)/2 and
// q^2 = mu^2 - det(M),  exp(M t) = e^{mu t} [cosh(q t) I + sinch(q t) t (M - mu I)].
inline Eigen::Matrix2cd expm_2x2(const Eigen::Matrix2cd& M, double t) {
  cplx mu = 0.5 * M.trace();
  cplx q = std::sqrt(mu * mu - M.determinant());
  cplx qt = q * t;
  cplx ch, sh_over_q;  // cosh(qt), sinh(qt)/q
  if (std::abs(qt) < 1e-6) {
    cplx qt2 = qt * qt;
    ch = 1.0 + qt2 / 2.0 + qt2 * qt2 / 24.0;
    sh_over_q = t * (1.0 + qt2 / 6.0 + qt2 * qt2 / 120.0);
  } else {
    ch = std::cosh(qt);
    sh_over_q = std::sinh(qt) / q;
  }
  Eigen::Matrix2cd E =
      ch * Eigen::Matrix2cd::Identity() + sh_over_q * (M - mu * Eigen::Matrix2cd::Identity());
  return std::exp(mu * t) * E;
}

}  // namespace detail

// Integrate the chain response to a drive at omega_drive with the qubit held
// in `state`, from t = 0 (both modes empty) to t_total.
inline FieldTrace simulate_response(const ReadoutChain& chain,
                                    const FeedlineSpec& feedline,
                                    QubitState state, const PulseSpec& pulse,
                                    double omega_drive, double t_total,
                                    double dt = 0.1e-9) {
  if (!(dt > 0.0)) throw invalid_input("simulate_response: dt must be positive");
  if (!(t_total >= dt))
    throw invalid_input("simulate_response: t_total shorter than one step");

  auto sys = detail::two_mode_system(chain, feedline, omega_drive, state);
  if (sys.M.real().trace() > 0.0)
    throw numerical_error("simulate_response: system has net gain");

  auto n_steps = static_cast<std::size_t>(std::ceil(t_total / dt));
  Eigen::Matrix2cd E = detail::expm_2x2(sys.M, dt);
  // x_{n+1} = E x_n + (I - E) s e_mid  with  s = -M^{-1} d  (exact for a
  // constant envelope across the step).
  Eigen::Vector2cd s = sys.M.fullPivLu().solve(-sys.drive);
  Eigen::Vector2cd inhom = (Eigen::Matrix2cd::Identity() - E) * s;

  FieldTrace tr;
  tr.dt = dt;
  tr.a.resize(n_steps + 1);
  tr.b.resize(n_steps + 1);
  tr.drive.resize(n_steps + 1);
  Eigen::Vector2cd x = Eigen::Vector2cd::Zero();
  tr.a[0] = x(0);
  tr.b[0] = x(1);
  tr.drive[0] = pulse_envelope(pulse, 0.0);
  for (std::size_t n = 0; n < n_steps; ++n) {
    double e_mid = pulse_envelope(pulse, (static_cast<double>(n) + 0.5) * dt);
    x = (E * x + inhom * e_mid).eval();
    tr.a[n + 1] = x(0);
    tr.b[n + 1] = x(1);
    tr.drive[n + 1] = pulse_envelope(pulse, static_cast<double>(n + 1) * dt);
  }
  return tr;
}

// Drive amplitude that fills the resonator to n_target photons in steady
// state (fields scale linearly with drive, photons quadratically).
inline double calibrate_amplitude(const ReadoutChain& chain,
                                  const FeedlineSpec& feedline,
                                  QubitState state, double omega_drive,
                                  double n_target) {
  if (!(n_target >= 0.0))
    throw invalid_input("calibrate_amplitude: photon target must be >= 0");
  double n_unit = steady_state_photon(chain, feedline, omega_drive, 1.0, state);
  if (!(n_unit > 0.0))
    throw numerical_error("calibrate_amplitude: drive does not reach resonator");
  return std::sqrt(n_target / n_unit);
}

inline std::vector<double> photon_number(const FieldTrace& tr) {
  std::vector<double> n(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) n[i] = std::norm(tr.b[i]);
  return n;
}

// First time >= t_ref after which the resonator population stays below
// frac * peak for the remainder of the trace.  Throws if the trace ends
// before the population has settled under the threshold.
inline double ringdown_time(const FieldTrace& tr, double t_ref,
                            double frac = 0.01) {
  if (tr.size() < 2) throw invalid_input("ringdown_time: empty trace");
  std::vector<double> n = photon_number(tr);
  double peak = 0.0;
  for (double v : n) peak = std::max(peak, v);
  if (peak == 0.0) return t_ref;
  double cut = frac * peak;
  std::size_t last_above = 0;
  bool any = false;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] > cut && tr.time(i) >= t_ref) {
      last_above = i;
      any = true;
    }
  }
  if (!any) return t_ref;
  if (last_above + 1 >= n.size())
    throw numerical_error("ringdown_time: trace ends before settling");
  return tr.time(last_above + 1);
}

namespace detail {

inline void check_same_grid(const FieldTrace& g, const FieldTrace& e) {
  if (g.dt != e.dt || g.size() != e.size())
    throw invalid_input("dephasing: traces must share the same time grid");
  if (g.size() < 2) throw invalid_input("dephasing: traces too short");
}

}  // namespace detail

// Instantaneous measurement-induced dephasing rate of the qubit, from the
// resonator fields conditioned on ground and excited preparations.
inline std::vector<double> dephasing_rate(const FieldTrace& g,
                                          const FieldTrace& e, double chi) {
  detail::check_same_grid(g, e);
  std::vector<double> rate(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    rate[i] = 2.0 * chi * std::imag(g.b[i] * std::conj(e.b[i]));
  return rate;
}

// Accumulated dephasing (trapezoid rule) over the whole trace.  The traces
// must extend well past the pulse: if the conditional fields still overlap at
// more than 1e-4 of their peak at the final sample, the integral is being
// truncated and the call fails instead of silently under-reporting.
inline double integrated_dephasing(const FieldTrace& g, const FieldTrace& e,
                                   double chi) {
  detail::check_same_grid(g, e);
  std::vector<double> rate = dephasing_rate(g, e, chi);
  double peak = 0.0;
  for (double r : rate) peak = std::max(peak, std::abs(r));
  if (peak > 0.0 && std::abs(rate.back()) > 1e-4 * peak)
    throw numerical_error("integrated_dephasing: trace truncated before the "
                          "fields have rung down");
  double sum = 0.0;
  for (std::size_t i = 1; i < rate.size(); ++i)
    sum += 0.5 * (rate[i - 1] + rate[i]) * g.dt;
  return sum;
}

// Mean dephasing rate over [t0, t1] (trapezoid over the covered samples).
inline double average_dephasing_rate(const FieldTrace& g, const FieldTrace& e,
                                     double chi, double t0, double t1) {
  detail::check_same_grid(g, e);
  if (!(t1 > t0)) throw invalid_input("average_dephasing_rate: empty window");
  std::vector<double> rate = dephasing_rate(g, e, chi);
  double sum = 0.0, span = 0.0;
  for (std::size_t i = 1; i < rate.size(); ++i) {
    double ta = g.time(i - 1), tb = g.time(i);
    if (ta < t0 || tb > t1) continue;
    sum += 0.5 * (rate[i - 1] + rate[i]) * g.dt;
    span += g.dt;
  }
  if (span == 0.0)
    throw invalid_input("average_dephasing_rate: window misses the grid");
  return sum / span;
}

// Probability of a qubit phase flip after accumulating the given dephasing.
inline double phase_error_probability(double integrated) {
  return 0.5 * (1.0 - std::exp(-integrated));
}

// Ramsey-style coherence envelope exp(-integral of the dephasing rate up to
// each sample), on the traces' grid.
inline std::vector<double> ramsey_contrast(const FieldTrace& g,
                                           const FieldTrace& e, double chi) {
  detail::check_same_grid(g, e);
  std::vector<double> rate = dephasing_rate(g, e, chi);
  std::vector<double> contrast(rate.size());
  contrast[0] = 1.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < rate.size(); ++i) {
    acc += 0.5 * (rate[i - 1] + rate[i]) * g.dt;
    contrast[i] = std::exp(-acc);
  }
  return contrast;
}

// Accumulated dephasing of every qubit (rows) while each chain's readout tone
// plays alone (columns).  All chains hang off the same feedline, so a tone
// aimed at chain j also drives chain i at j's frequency; the chains do not
// otherwise interact.  The integration grid is refined automatically so that
// the fastest beat note between tone and chain stays well resolved in the
// trapezoid sums.
inline std::vector<std::vector<double>> crosstalk_dephasing_matrix(
    const std::vector<ReadoutChain>& chains, const FeedlineSpec& feedline,
    const std::vector<double>& drive_freqs, const std::vector<PulseSpec>& pulses,
    double t_total, double dt_max = 0.1e-9) {
  std::size_t n = chains.size();
  if (drive_freqs.size() != n || pulses.size() != n)
    throw invalid_input("crosstalk_dephasing_matrix: need one tone and one "
                        "pulse per chain");
  std::vector<std::vector<double>> gamma(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {     // tone on chain j
    for (std::size_t i = 0; i < n; ++i) {   // dephasing of qubit i
      const ReadoutChain& victim = chains[i];
      auto [wa_eff, ka_eff] = effective_filter_params(victim, feedline);
      double w_g = dressed_resonator_freq(victim, QubitState::ground);
      double w_e = dressed_resonator_freq(victim, QubitState::excited);
      double fastest = std::max({std::abs(wa_eff - drive_freqs[j]),
                                 std::abs(w_g - drive_freqs[j]),
                                 std::abs(w_e - drive_freqs[j]), ka_eff,
                                 victim.J});
      double dt = dt_max;
      if (fastest > 0.0) dt = std::min(dt, 0.25 / fastest);
      FieldTrace tg = simulate_response(victim, feedline, QubitState::ground,
                                        pulses[j], drive_freqs[j], t_total, dt);
      FieldTrace te = simulate_response(victim, feedline, QubitState::excited,
                                        pulses[j], drive_freqs[j], t_total, dt);
      gamma[i][j] = integrated_dephasing(tg, te, victim.chi);
    }
  }
  return gamma;
}

}  // namespace muxread
