// Command-line front end.  Each subcommand is a thin wrapper over the
// library: load a device config, run one computation, write a CSV file
// and/or a short JSON summary on stdout.
//
// Exit codes: 0 success, 1 invalid input (bad flags, bad config, malformed
// data), 2 numerical failure (non-convergence, unstable integration).

#include <complex>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "muxread/circuit_model.hpp"
#include "muxread/config.hpp"
#include "muxread/csv.hpp"
#include "muxread/dynamics.hpp"
#include "muxread/multi_qubit.hpp"
#include "muxread/pipeline.hpp"
#include "muxread/readout_signal.hpp"
#include "muxread/resonator_geometry.hpp"
#include "muxread/spectrum_fitter.hpp"
#include "muxread/units.hpp"

namespace {

using nlohmann::ordered_json;

muxread::QubitState parse_state(const std::string& s) {
  if (s == "g" || s == "ground") return muxread::QubitState::ground;
  if (s == "e" || s == "excited") return muxread::QubitState::excited;
  throw muxread::invalid_input("state must be 'g' or 'e', got '" + s + "'");
}

// Stable run identifier mixed from the user seed and the subcommand scope,
// so different subcommands (and channels) never share a random stream.
std::uint64_t scoped_key(const std::string& scope) {
  return muxread::detail::fnv1a(scope);
}

std::vector<std::string> csv_header(const muxread::DeviceConfig& cfg,
                                    const std::string& tool,
                                    std::uint64_t seed) {
  return {
      "tool: muxread " + tool,
      "config_fnv1a: " + std::to_string(muxread::config_hash(cfg)),
      "seed: " + std::to_string(seed),
  };
}

int cmd_info(const muxread::DeviceConfig& cfg) {
  ordered_json out;
  out["directionality_at_7GHz"] =
      muxread::directionality(cfg.feedline, muxread::rad_from_ghz(7.0));
  out["channels"] = ordered_json::array();
  for (const auto& ch : cfg.channels) {
    muxread::ReadoutChain chain = ch.chain(cfg.feedline);
    ordered_json c;
    c["name"] = ch.name;
    c["qubit"] = ch.qubit;
    c["kappa_R_MHz"] = muxread::mhz_from_rad(
        muxread::effective_readout_linewidth(chain, cfg.feedline));
    c["kappa_R_quoted_MHz"] = muxread::mhz_from_rad(ch.readout.kappa_R_quoted);
    c["n_crit"] = muxread::critical_photon_number(ch.g, ch.omega_Q,
                                                  ch.readout.omega_drive);
    c["purcell_T1_limit_us"] = muxread::us_from_sec(muxread::purcell_t1_limit(
        chain, cfg.feedline, ch.omega_Q - ch.omega_R, true));
    out["channels"].push_back(std::move(c));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_spectrum(const muxread::DeviceConfig& cfg, const std::string& channel,
                 const std::string& state_str, double from_ghz, double to_ghz,
                 std::size_t points, const std::string& out_path) {
  const auto& ch = cfg.channel(channel);
  muxread::ReadoutChain chain = ch.chain(cfg.feedline);
  muxread::QubitState state = parse_state(state_str);
  if (!(to_ghz > from_ghz) || points < 2)
    throw muxread::invalid_input("spectrum: need to > from and points >= 2");

  muxread::CsvTable t;
  t.comments = csv_header(cfg, "spectrum " + ch.name, 0);
  t.columns = {"frequency_GHz", "magnitude", "phase_rad"};
  for (std::size_t i = 0; i < points; ++i) {
    double f = from_ghz + (to_ghz - from_ghz) * static_cast<double>(i) /
                              static_cast<double>(points - 1);
    std::complex<double> s = muxread::s21_normalized(
        chain, cfg.feedline, muxread::rad_from_ghz(f), state);
    t.rows.push_back({f, std::abs(s), std::arg(s)});
  }
  muxread::write_csv_file(out_path, t);
  return 0;
}

int cmd_timetrace(const muxread::DeviceConfig& cfg, const std::string& channel,
                  const std::string& state_str, double dt_ns,
                  const std::string& out_path) {
  const auto& ch = cfg.channel(channel);
  muxread::FieldTrace tr = muxread::channel_trace(
      cfg, ch, parse_state(state_str), muxread::channel_window(cfg, ch),
      muxread::sec_from_ns(dt_ns));
  muxread::CsvTable t;
  t.comments = csv_header(cfg, "timetrace " + ch.name, 0);
  t.columns = {"t_ns", "re_a", "im_a", "re_b", "im_b", "photons_b"};
  for (std::size_t i = 0; i < tr.size(); ++i) {
    t.rows.push_back({muxread::ns_from_sec(tr.time(i)), tr.a[i].real(),
                      tr.a[i].imag(), tr.b[i].real(), tr.b[i].imag(),
                      std::norm(tr.b[i])});
  }
  muxread::write_csv_file(out_path, t);
  return 0;
}

int cmd_dephasing(const muxread::DeviceConfig& cfg, const std::string& channel,
                  double dt_ns, const std::string& out_path) {
  const auto& ch = cfg.channel(channel);
  double t_total = muxread::channel_window(cfg, ch);
  double dt = muxread::sec_from_ns(dt_ns);
  muxread::FieldTrace g =
      muxread::channel_trace(cfg, ch, muxread::QubitState::ground, t_total, dt);
  muxread::FieldTrace e = muxread::channel_trace(
      cfg, ch, muxread::QubitState::excited, t_total, dt);
  std::vector<double> rate = muxread::dephasing_rate(g, e, ch.chi);
  double total = muxread::integrated_dephasing(g, e, ch.chi);

  if (!out_path.empty()) {
    muxread::CsvTable t;
    t.comments = csv_header(cfg, "dephasing " + ch.name, 0);
    t.columns = {"t_ns", "rate_per_us"};
    for (std::size_t i = 0; i < rate.size(); ++i)
      t.rows.push_back({muxread::ns_from_sec(g.time(i)), rate[i] * 1e-6});
    muxread::write_csv_file(out_path, t);
  }

  ordered_json out;
  out["channel"] = ch.name;
  out["dephasing_integral"] = total;
  out["snr_at_eta"] = std::sqrt(4.0 * ch.readout.eta * total);
  out["phase_error_probability"] = muxread::phase_error_probability(total);
  out["final_ramsey_contrast"] = muxread::ramsey_contrast(g, e, ch.chi).back();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_shots(const muxread::DeviceConfig& cfg, const std::string& channel,
              const std::string& prepared_str, std::size_t n_shots,
              std::uint64_t seed, bool no_herald,
              const std::string& out_path) {
  const auto& ch = cfg.channel(channel);
  muxread::WeightProfile profile = muxread::build_channel_pipeline(cfg, ch).profile;

  muxread::ShotBatch batch = muxread::generate_shots(
      {ch.generator}, {profile}, {parse_state(prepared_str)}, n_shots, seed,
      scoped_key("shots " + ch.name), !no_herald);

  muxread::CsvTable t;
  t.comments = csv_header(cfg, "shots " + ch.name, seed);
  t.comments.push_back("expected_discard: " +
                       muxread::format_number(batch.expected_discard));
  t.columns = {"shot", "value", "final_excited"};
  for (std::size_t i = 0; i < batch.n_shots; ++i)
    t.rows.push_back({static_cast<double>(i), batch.values[i],
                      batch.final_excited[i] ? 1.0 : 0.0});
  muxread::write_csv_file(out_path, t);
  return 0;
}

int cmd_assignment(const muxread::DeviceConfig& cfg,
                   std::size_t shots_per_pattern, std::uint64_t seed,
                   const std::string& out_path,
                   const std::string& xf_out_path) {
  std::vector<muxread::GeneratorSettings> qubits;
  std::vector<muxread::WeightProfile> profiles;
  for (const auto& ch : cfg.channels) {
    qubits.push_back(ch.generator);
    profiles.push_back(muxread::build_channel_pipeline(cfg, ch).profile);
  }

  std::vector<double> thresholds =
      muxread::calibrate_thresholds(qubits, profiles, 20000, seed);
  muxread::AssignmentMatrix m = muxread::measure_assignment_matrix(
      qubits, profiles, thresholds, shots_per_pattern, seed);

  muxread::CsvTable t;
  t.comments = csv_header(cfg, "assignment", seed);
  t.comments.push_back("rows: prepared pattern index; columns: assigned");
  t.columns.push_back("prepared");
  for (std::size_t j = 0; j < m.dim(); ++j)
    t.columns.push_back("p" + std::to_string(j));
  for (std::size_t i = 0; i < m.dim(); ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m.at(i, j));
    t.rows.push_back(std::move(row));
  }
  muxread::write_csv_file(out_path, t);

  std::vector<std::vector<double>> xf = muxread::cross_fidelity(m);
  if (!xf_out_path.empty()) {
    muxread::CsvTable x;
    x.comments = csv_header(cfg, "cross-fidelity", seed);
    x.columns.push_back("qubit");
    for (std::size_t j = 0; j < xf.size(); ++j)
      x.columns.push_back("F" + std::to_string(j));
    for (std::size_t i = 0; i < xf.size(); ++i) {
      std::vector<double> row{static_cast<double>(i)};
      for (std::size_t j = 0; j < xf.size(); ++j) row.push_back(xf[i][j]);
      x.rows.push_back(std::move(row));
    }
    muxread::write_csv_file(xf_out_path, x);
  }

  ordered_json out;
  out["patterns"] = m.dim();
  out["shots_per_pattern"] = shots_per_pattern;
  std::size_t all_e = m.dim() - 1;
  out["p_all_excited_given_all_pi"] = m.at(all_e, all_e);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_fit(const muxread::DeviceConfig& cfg, const std::string& in_path) {
  muxread::CsvTable t = muxread::read_csv_file(in_path);
  if (t.columns.size() < 2)
    throw muxread::invalid_input("fit: need frequency and magnitude columns");
  muxread::SpectrumData d;
  for (const auto& row : t.rows) {
    d.frequency.push_back(muxread::rad_from_ghz(row[0]));
    d.magnitude.push_back(row[1]);
  }
  muxread::ChainFitResult r = muxread::fit_s21(d, cfg.feedline);

  ordered_json out;
  out["omega_P_eff_GHz"] = muxread::ghz_from_rad(r.omega_P_eff);
  out["kappa_P_eff_MHz"] = muxread::mhz_from_rad(r.kappa_P_eff);
  out["omega_R_GHz"] = muxread::ghz_from_rad(r.omega_R);
  out["J_MHz"] = muxread::mhz_from_rad(r.J);
  out["kappa_R_MHz"] = muxread::mhz_from_rad(r.kappa_R());
  out["sigma_J_MHz"] = muxread::mhz_from_rad(r.sigma_J);
  out["chi2"] = r.chi2;
  out["converged"] = r.converged;
  out["used_fallback"] = r.used_fallback;
  std::cout << out.dump(2) << "\n";
  return r.converged ? 0 : 2;
}

int cmd_geometry(double length_mm, double tap_mm, double c0_ff, double cc_ff,
                 double ell, double cap, const std::string& scan_param,
                 double from, double to, std::size_t points,
                 const std::string& out_path) {
  muxread::QuarterWaveGeometry g;
  g.d = length_mm * 1e-3;
  g.x_c = tap_mm * 1e-3;
  g.C0 = muxread::farad_from_ff(c0_ff);
  g.C_c = muxread::farad_from_ff(cc_ff);
  g.ell = ell;
  g.cap = cap;

  if (!scan_param.empty()) {
    muxread::ScanParameter p;
    double unit = 1.0;
    if (scan_param == "length" || scan_param == "tap") {
      p = scan_param == "length" ? muxread::ScanParameter::length
                                 : muxread::ScanParameter::tap_position;
      unit = 1e-3;  // flag values in mm
    } else if (scan_param == "C0" || scan_param == "Cc") {
      p = scan_param == "C0" ? muxread::ScanParameter::end_capacitance
                             : muxread::ScanParameter::tap_capacitance;
      unit = 1e-15;  // flag values in fF
    } else {
      throw muxread::invalid_input("geometry: unknown scan parameter '" +
                                   scan_param + "'");
    }
    auto rows = muxread::design_scan(g, p, from * unit, to * unit, points);
    muxread::CsvTable t;
    t.comments = {"tool: muxread geometry scan " + scan_param};
    t.columns = {"value", "frequency_GHz", "ok"};
    for (const auto& r : rows)
      t.rows.push_back({r.value / unit,
                        r.ok ? muxread::ghz_from_rad(r.mode.omega) : 0.0,
                        r.ok ? 1.0 : 0.0});
    muxread::write_csv_file(out_path, t);
    return 0;
  }

  muxread::ModeSolution m = muxread::solve_fundamental_mode(g);
  ordered_json out;
  out["frequency_GHz"] = muxread::ghz_from_rad(m.omega);
  out["unloaded_GHz"] = muxread::ghz_from_rad(g.unloaded_fundamental());
  out["k_per_m"] = m.k;
  out["voltage_ratio_B"] = m.B;
  out["end_phase_theta"] = m.theta;
  out["residual_matching"] = m.residual_matching;
  out["residual_end"] = m.residual_end;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplexed dispersive readout simulator"};
  app.require_subcommand(1);

  std::string config_path, channel = "R6", state = "g", out_path, in_path;
  std::string xf_out_path, scan_param;
  double from_ghz = 6.7, to_ghz = 7.1, dt_ns = 0.05;
  std::size_t points = 801, n_shots = 10000, shots_per_pattern = 2000;
  std::uint64_t seed = 1;
  bool no_herald = false;
  double length_mm = 4.3, tap_mm = 3.87, c0_ff = 5.0, cc_ff = 12.0;
  double ell = 4.1e-7, cap = 1.6e-10, scan_from = 0.0, scan_to = 0.0;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "device JSON file")->required();
  };

  CLI::App* info = app.add_subcommand("info", "derived per-channel figures");
  add_config(info);

  CLI::App* spectrum =
      app.add_subcommand("spectrum", "normalized |S21| over frequency");
  add_config(spectrum);
  spectrum->add_option("--channel", channel, "resonator or qubit label");
  spectrum->add_option("--state", state, "qubit state g|e");
  spectrum->add_option("--from-ghz", from_ghz, "start frequency");
  spectrum->add_option("--to-ghz", to_ghz, "end frequency");
  spectrum->add_option("--points", points, "number of samples");
  spectrum->add_option("--out", out_path, "output CSV")->required();

  CLI::App* timetrace =
      app.add_subcommand("timetrace", "pulsed field response of one channel");
  add_config(timetrace);
  timetrace->add_option("--channel", channel, "resonator or qubit label");
  timetrace->add_option("--state", state, "qubit state g|e");
  timetrace->add_option("--dt-ns", dt_ns, "output grid step");
  timetrace->add_option("--out", out_path, "output CSV")->required();

  CLI::App* dephasing = app.add_subcommand(
      "dephasing", "measurement-induced dephasing during the pulse");
  add_config(dephasing);
  dephasing->add_option("--channel", channel, "resonator or qubit label");
  dephasing->add_option("--dt-ns", dt_ns, "integration step");
  dephasing->add_option("--out", out_path, "optional rate-vs-time CSV");

  CLI::App* shots =
      app.add_subcommand("shots", "single-shot readout values for one qubit");
  add_config(shots);
  shots->add_option("--channel", channel, "resonator or qubit label");
  shots->add_option("--prepared", state, "prepared state g|e");
  shots->add_option("--shots", n_shots, "number of shots");
  shots->add_option("--seed", seed, "random seed");
  shots->add_flag("--no-herald", no_herald, "skip the heralding step");
  shots->add_option("--out", out_path, "output CSV")->required();

  CLI::App* assignment = app.add_subcommand(
      "assignment", "full multi-qubit assignment probability matrix");
  add_config(assignment);
  assignment->add_option("--shots-per-pattern", shots_per_pattern,
                         "repetitions of each preparation");
  assignment->add_option("--seed", seed, "random seed");
  assignment->add_option("--out", out_path, "matrix CSV")->required();
  assignment->add_option("--cross-fidelity-out", xf_out_path,
                         "optional cross-fidelity CSV");

  CLI::App* fit =
      app.add_subcommand("fit", "fit filter/resonator parameters to |S21|");
  add_config(fit);
  fit->add_option("--in", in_path, "CSV with frequency_GHz,magnitude")
      ->required();

  CLI::App* geometry = app.add_subcommand(
      "geometry", "quarter-wave resonator mode from layout values");
  geometry->add_option("--length-mm", length_mm, "resonator length");
  geometry->add_option("--tap-mm", tap_mm, "coupling tap position");
  geometry->add_option("--c0-ff", c0_ff, "open-end shunt capacitance");
  geometry->add_option("--cc-ff", cc_ff, "tap coupling capacitance");
  geometry->add_option("--ell-per-m", ell, "inductance per meter");
  geometry->add_option("--cap-per-m", cap, "capacitance per meter");
  geometry->add_option("--scan", scan_param, "scan length|tap|C0|Cc");
  geometry->add_option("--from", scan_from, "scan start (mm or fF)");
  geometry->add_option("--to", scan_to, "scan end (mm or fF)");
  geometry->add_option("--points", points, "scan samples");
  geometry->add_option("--out", out_path, "scan CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (info->parsed()) return cmd_info(muxread::load_device_config(config_path));
    if (spectrum->parsed())
      return cmd_spectrum(muxread::load_device_config(config_path), channel,
                          state, from_ghz, to_ghz, points, out_path);
    if (timetrace->parsed())
      return cmd_timetrace(muxread::load_device_config(config_path), channel,
                           state, dt_ns, out_path);
    if (dephasing->parsed())
      return cmd_dephasing(muxread::load_device_config(config_path), channel,
                           dt_ns, out_path);
    if (shots->parsed())
      return cmd_shots(muxread::load_device_config(config_path), channel,
                       state, n_shots, seed, no_herald, out_path);
    if (assignment->parsed())
      return cmd_assignment(muxread::load_device_config(config_path),
                            shots_per_pattern, seed, out_path, xf_out_path);
    if (fit->parsed())
      return cmd_fit(muxread::load_device_config(config_path), in_path);
    if (geometry->parsed())
      return cmd_geometry(length_mm, tap_mm, c0_ff, cc_ff, ell, cap,
                          scan_param, scan_from, scan_to, points, out_path);
  } catch (const muxread::invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const muxread::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
