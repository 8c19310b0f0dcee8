#pragma once

// Standard readout pipeline for one configured channel: simulate the pulsed
// ground/excited responses, build the matched filter, and derive the
// quantities the shot generator needs.  The command-line tools and the test
// programs all go through this header so that a channel's integration
// weights and SNR mean the same thing everywhere.

#include <cmath>

#include "muxread/circuit_model.hpp"
#include "muxread/config.hpp"
#include "muxread/dynamics.hpp"
#include "muxread/readout_signal.hpp"

namespace muxread {

// Time window long enough for the resonator to ring down to a negligible
// population after the pulse: lead-in, flat top, and ~9.5 field lifetimes.
inline double channel_window(const DeviceConfig& cfg,
                             const ChannelConfig& ch) {
  ReadoutChain chain = ch.chain(cfg.feedline);
  double kappa_R = effective_readout_linewidth(chain, cfg.feedline);
  return 6.0 * cfg.pulse.filter_sigma + cfg.pulse.duration + 9.5 / kappa_R +
         50e-9;
}

// Pulse response of one channel at its configured drive tone, amplitude
// calibrated so the ground-state resonator holds the configured photon
// number in steady state.
inline FieldTrace channel_trace(const DeviceConfig& cfg,
                                const ChannelConfig& ch, QubitState state,
                                double t_total, double dt = 0.05e-9) {
  ReadoutChain chain = ch.chain(cfg.feedline);
  PulseSpec pulse;
  pulse.shape = PulseShape::gaussian_filtered_square;
  pulse.t_start = 6.0 * cfg.pulse.filter_sigma;
  pulse.duration = cfg.pulse.duration;
  pulse.sigma = cfg.pulse.filter_sigma;
  pulse.amplitude =
      calibrate_amplitude(chain, cfg.feedline, QubitState::ground,
                          ch.readout.omega_drive, ch.readout.n_photons);
  return simulate_response(chain, cfg.feedline, state, pulse,
                           ch.readout.omega_drive, t_total, dt);
}

struct ChannelPipeline {
  FieldTrace trace_g;
  FieldTrace trace_e;
  WeightProfile profile;
  double dephasing_integral = 0.0;  // integral of Gamma(t) over the window
  double snr_at_eta = 0.0;          // SNR implied by the configured efficiency
  double t_half = 0.0;              // time by which half the weight is in
};

inline ChannelPipeline build_channel_pipeline(const DeviceConfig& cfg,
                                              const ChannelConfig& ch,
                                              double dt = 0.05e-9) {
  ChannelPipeline p;
  double t_total = channel_window(cfg, ch);
  p.trace_g = channel_trace(cfg, ch, QubitState::ground, t_total, dt);
  p.trace_e = channel_trace(cfg, ch, QubitState::excited, t_total, dt);
  p.profile = build_matched_filter(p.trace_g, p.trace_e).profile();
  p.dephasing_integral = integrated_dephasing(p.trace_g, p.trace_e, ch.chi);
  p.snr_at_eta = std::sqrt(4.0 * ch.readout.eta * p.dephasing_integral);
  p.t_half = p.profile.half_time();
  return p;
}

}  // namespace muxread
