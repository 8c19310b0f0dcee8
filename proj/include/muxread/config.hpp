#pragma once

// Device configuration.  One JSON file describes the shared feedline, the
// readout pulse defaults, and every readout channel: resonator, Purcell
// filter, qubit, drive settings, and the stochastic shot-generator knobs.
//
// Frequencies in the file carry unit suffixes (_GHz, _MHz, _ns, _us, _fF,
// _ohm); in memory everything is SI (rad/s, seconds, farads, ohms).  Filter
// parameters may be given either as the effective (loaded) values or as the
// bare ones; the canonical on-disk form is effective, so a save after a load
// always produces the same bytes regardless of which style the input used.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "muxread/circuit_model.hpp"
#include "muxread/detail/rng.hpp"
#include "muxread/errors.hpp"
#include "muxread/readout_signal.hpp"
#include "muxread/units.hpp"

namespace muxread {

struct PulseDefaults {
  double duration = 80e-9;       // flat-top length, s
  double filter_sigma = 5e-9;    // Gaussian envelope filter, s
};

// Per-channel drive settings and the quoted figures the device is expected
// to reproduce (used by reports and by the acceptance checks).
struct ReadoutSettings {
  double omega_drive = 0.0;      // readout tone, rad/s
  double n_photons = 0.0;        // steady-state resonator population target
  double eta = 0.0;              // quoted measurement efficiency, 0..1
  double kappa_R_quoted = 0.0;   // quoted effective linewidth, rad/s
  double p_correct_quoted = 0.0; // quoted assignment probability, 0..1
};

struct ChannelConfig {
  std::string name;              // resonator label, e.g. "R6"
  std::string qubit;             // qubit label, e.g. "Q6"
  double omega_R = 0.0;          // rad/s
  double omega_P_eff = 0.0;      // effective filter frequency, rad/s
  double kappa_P_eff = 0.0;      // effective filter linewidth, rad/s
  double J = 0.0;                // filter-resonator coupling, rad/s
  double chi = 0.0;              // dispersive shift, rad/s (negative here)
  double g = 0.0;                // qubit-resonator coupling, rad/s
  double omega_Q = 0.0;          // qubit frequency, rad/s
  double T1 = 0.0;               // qubit relaxation time, s
  double P_therm = 0.0;          // thermal excited-state population, 0..1
  ReadoutSettings readout;
  GeneratorSettings generator;   // T1 and p_therm mirror the fields above

  // Physical chain with bare filter parameters recovered from the effective
  // ones (the only form the physics routines accept).
  ReadoutChain chain(const FeedlineSpec& fl) const {
    ReadoutChain c;
    c.name = name;
    c.omega_R = omega_R;
    auto bare = bare_filter_params_from_effective(fl, omega_P_eff, kappa_P_eff);
    c.omega_P_bare = bare.first;
    c.kappa_P_bare = bare.second;
    c.J = J;
    c.chi = chi;
    c.g = g;
    c.omega_Q = omega_Q;
    c.T1 = T1;
    c.P_therm = P_therm;
    return c;
  }
};

struct DeviceConfig {
  FeedlineSpec feedline;
  PulseDefaults pulse;
  std::vector<ChannelConfig> channels;

  // Look up a channel by resonator or qubit label.
  const ChannelConfig& channel(const std::string& label) const {
    for (const auto& c : channels)
      if (c.name == label || c.qubit == label) return c;
    throw invalid_input("config: no channel named '" + label + "'");
  }
};

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& key,
                             const std::string& where) {
  if (!j.contains(key))
    throw invalid_input("config: missing key '" + key + "' in " + where);
  if (!j[key].is_number())
    throw invalid_input("config: key '" + key + "' in " + where +
                        " is not a number");
  return j[key].get<double>();
}

inline std::string require_string(const nlohmann::json& j,
                                  const std::string& key,
                                  const std::string& where) {
  if (!j.contains(key) || !j[key].is_string())
    throw invalid_input("config: missing string '" + key + "' in " + where);
  return j[key].get<std::string>();
}

// Quantize to 12 significant digits for the canonical file form.  SI<->file
// unit conversions can wobble by an ulp per round trip; snapping to 12
// digits absorbs that, so load-save cycles are byte-stable.
inline double canonical_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace detail

inline DeviceConfig parse_device_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(std::string("config: JSON parse error: ") + e.what());
  }

  DeviceConfig cfg;
  if (!j.contains("feedline"))
    throw invalid_input("config: missing 'feedline' section");
  cfg.feedline.Z0 = detail::require_number(j["feedline"], "Z0_ohm", "feedline");
  cfg.feedline.C_in =
      1e-15 * detail::require_number(j["feedline"], "C_in_fF", "feedline");
  if (cfg.feedline.Z0 <= 0.0 || cfg.feedline.C_in < 0.0)
    throw invalid_input("config: feedline impedance/capacitance out of range");

  if (j.contains("pulse")) {
    cfg.pulse.duration =
        1e-9 * detail::require_number(j["pulse"], "duration_ns", "pulse");
    cfg.pulse.filter_sigma =
        1e-9 * detail::require_number(j["pulse"], "filter_sigma_ns", "pulse");
    if (cfg.pulse.duration <= 0.0 || cfg.pulse.filter_sigma <= 0.0)
      throw invalid_input("config: pulse durations must be positive");
  }

  if (!j.contains("channels") || !j["channels"].is_array() ||
      j["channels"].empty())
    throw invalid_input("config: 'channels' must be a non-empty array");

  for (const auto& cj : j["channels"]) {
    ChannelConfig c;
    c.name = detail::require_string(cj, "name", "channel");
    const std::string& w = c.name;
    c.qubit = detail::require_string(cj, "qubit", w);
    c.omega_R = rad_from_ghz(detail::require_number(cj, "omega_R_GHz", w));

    if (!cj.contains("filter"))
      throw invalid_input("config: missing 'filter' in " + w);
    const auto& fj = cj["filter"];
    if (fj.contains("omega_eff_GHz")) {
      c.omega_P_eff =
          rad_from_ghz(detail::require_number(fj, "omega_eff_GHz", w));
      c.kappa_P_eff =
          rad_from_mhz(detail::require_number(fj, "kappa_eff_MHz", w));
    } else if (fj.contains("omega_bare_GHz")) {
      ReadoutChain tmp;
      tmp.omega_P_bare =
          rad_from_ghz(detail::require_number(fj, "omega_bare_GHz", w));
      tmp.kappa_P_bare =
          rad_from_mhz(detail::require_number(fj, "kappa_bare_MHz", w));
      EffectiveChainParams eff = effective_filter_params(tmp, cfg.feedline);
      c.omega_P_eff = eff.omega_P_eff;
      c.kappa_P_eff = eff.kappa_P_eff;
    } else {
      throw invalid_input("config: filter in " + w +
                          " needs omega_eff_GHz or omega_bare_GHz");
    }
    if (c.kappa_P_eff <= 0.0)
      throw invalid_input("config: non-positive filter linewidth in " + w);

    c.J = rad_from_mhz(detail::require_number(cj, "J_MHz", w));
    c.chi = rad_from_mhz(detail::require_number(cj, "chi_MHz", w));
    c.g = rad_from_mhz(detail::require_number(cj, "g_MHz", w));
    c.omega_Q = rad_from_ghz(detail::require_number(cj, "omega_Q_GHz", w));
    c.T1 = 1e-6 * detail::require_number(cj, "T1_us", w);
    c.P_therm = detail::require_number(cj, "P_therm", w);
    if (c.J <= 0.0 || c.g <= 0.0 || c.T1 <= 0.0)
      throw invalid_input("config: non-positive J, g, or T1 in " + w);
    if (c.P_therm < 0.0 || c.P_therm >= 1.0)
      throw invalid_input("config: P_therm out of [0,1) in " + w);

    if (!cj.contains("readout"))
      throw invalid_input("config: missing 'readout' in " + w);
    const auto& rj = cj["readout"];
    c.readout.omega_drive =
        rad_from_ghz(detail::require_number(rj, "omega_drive_GHz", w));
    c.readout.n_photons = detail::require_number(rj, "n_photons", w);
    c.readout.eta = detail::require_number(rj, "eta", w);
    c.readout.kappa_R_quoted =
        rad_from_mhz(detail::require_number(rj, "kappa_R_MHz", w));
    c.readout.p_correct_quoted = detail::require_number(rj, "p_correct", w);

    if (!cj.contains("generator"))
      throw invalid_input("config: missing 'generator' in " + w);
    const auto& gj = cj["generator"];
    c.generator.snr = detail::require_number(gj, "snr", w);
    c.generator.mixing_rate =
        1e6 * detail::require_number(gj, "mixing_rate_per_us", w);
    c.generator.t_prep = 1e-9 * detail::require_number(gj, "t_prep_ns", w);
    c.generator.T1 = c.T1;
    c.generator.p_therm = c.P_therm;

    for (const auto& prev : cfg.channels)
      if (prev.name == c.name || prev.qubit == c.qubit)
        throw invalid_input("config: duplicate channel label " + c.name);
    cfg.channels.push_back(std::move(c));
  }
  return cfg;
}

inline DeviceConfig load_device_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_device_config(buf.str());
}

// Canonical serialization: fixed key order, effective filter keys, shortest
// round-trip number formatting (courtesy of the JSON library).  Parsing the
// result reproduces the config exactly, so save-load-save is byte-stable.
inline std::string canonical_config_json(const DeviceConfig& cfg) {
  nlohmann::ordered_json j;
  j["feedline"]["Z0_ohm"] = detail::canonical_number(cfg.feedline.Z0);
  j["feedline"]["C_in_fF"] = detail::canonical_number(cfg.feedline.C_in * 1e15);
  j["pulse"]["duration_ns"] = detail::canonical_number(cfg.pulse.duration * 1e9);
  j["pulse"]["filter_sigma_ns"] = detail::canonical_number(cfg.pulse.filter_sigma * 1e9);
  j["channels"] = nlohmann::ordered_json::array();
  for (const auto& c : cfg.channels) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["qubit"] = c.qubit;
    cj["omega_R_GHz"] = detail::canonical_number(ghz_from_rad(c.omega_R));
    cj["filter"]["omega_eff_GHz"] = detail::canonical_number(ghz_from_rad(c.omega_P_eff));
    cj["filter"]["kappa_eff_MHz"] = detail::canonical_number(mhz_from_rad(c.kappa_P_eff));
    cj["J_MHz"] = detail::canonical_number(mhz_from_rad(c.J));
    cj["chi_MHz"] = detail::canonical_number(mhz_from_rad(c.chi));
    cj["g_MHz"] = detail::canonical_number(mhz_from_rad(c.g));
    cj["omega_Q_GHz"] = detail::canonical_number(ghz_from_rad(c.omega_Q));
    cj["T1_us"] = detail::canonical_number(c.T1 * 1e6);
    cj["P_therm"] = detail::canonical_number(c.P_therm);
    cj["readout"]["omega_drive_GHz"] = detail::canonical_number(ghz_from_rad(c.readout.omega_drive));
    cj["readout"]["n_photons"] = detail::canonical_number(c.readout.n_photons);
    cj["readout"]["eta"] = detail::canonical_number(c.readout.eta);
    cj["readout"]["kappa_R_MHz"] = detail::canonical_number(mhz_from_rad(c.readout.kappa_R_quoted));
    cj["readout"]["p_correct"] = detail::canonical_number(c.readout.p_correct_quoted);
    cj["generator"]["snr"] = detail::canonical_number(c.generator.snr);
    cj["generator"]["mixing_rate_per_us"] = detail::canonical_number(c.generator.mixing_rate * 1e-6);
    cj["generator"]["t_prep_ns"] = detail::canonical_number(c.generator.t_prep * 1e9);
    j["channels"].push_back(std::move(cj));
  }
  return j.dump(2) + "\n";
}

inline void save_device_config(const DeviceConfig& cfg,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw invalid_input("config: cannot write '" + path + "'");
  out << canonical_config_json(cfg);
}

// Hash of the canonical form; stamped into CSV headers so that outputs can
// be traced back to the exact configuration that produced them.
inline std::uint64_t config_hash(const DeviceConfig& cfg) {
  return detail::fnv1a(canonical_config_json(cfg));
}

}  // namespace muxread
