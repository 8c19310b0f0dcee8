// Calibrates the per-qubit shot-generator settings against the device
// physics, mirroring how the experiment is tuned up:
//
//   1. SNR comes from the channel's simulated dephasing integral and its
//      configured measurement efficiency, snr = sqrt(4 eta Gamma tau).
//   2. The readout-induced mixing rate is set so that a ground-state qubit
//      is misassigned with ~1% probability (the top of the observed range).
//   3. The preparation delay t_prep is bisected until the simulated correct
//      assignment probability matches the channel's configured target.
//
// With --write, the tuned numbers replace the generator section of the
// config file (canonical formatting); otherwise they are just printed.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "muxread/config.hpp"
#include "muxread/pipeline.hpp"
#include "muxread/readout_signal.hpp"

namespace {

using nlohmann::ordered_json;

struct TrialResult {
  double p_correct = 0.0;
  double p_e_given_0 = 0.0;  // ground preparation assigned excited
  double p_g_given_pi = 0.0; // excited preparation assigned ground
  double threshold = 0.0;
};

// Simulate one calibration batch and score it.  The same seed and row keys
// are reused for every trial (common random numbers), so p_correct varies
// smoothly with t_prep and bisection is reliable.
TrialResult run_trial(const muxread::GeneratorSettings& gen,
                      const muxread::WeightProfile& profile,
                      std::size_t n_shots, std::uint64_t seed) {
  muxread::ShotBatch bg =
      muxread::generate_shots({gen}, {profile}, {muxread::QubitState::ground},
                              n_shots, seed, 0xA11CE);
  muxread::ShotBatch be =
      muxread::generate_shots({gen}, {profile}, {muxread::QubitState::excited},
                              n_shots, seed, 0xB0B);
  TrialResult r;
  r.threshold = muxread::optimize_threshold(bg.values, be.values);
  std::size_t e0 = 0, g1 = 0;
  for (double v : bg.values) e0 += muxread::classify(v, r.threshold) ? 1 : 0;
  for (double v : be.values) g1 += muxread::classify(v, r.threshold) ? 0 : 1;
  r.p_e_given_0 = static_cast<double>(e0) / static_cast<double>(n_shots);
  r.p_g_given_pi = static_cast<double>(g1) / static_cast<double>(n_shots);
  r.p_correct = 1.0 - 0.5 * (r.p_e_given_0 + r.p_g_given_pi);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tune shot-generator settings to the configured targets"};
  std::string config_path;
  std::size_t n_search = 60000, n_final = 250000;
  std::uint64_t seed = 20260815;
  double mixing_target = 0.01;
  bool write = false;
  app.add_option("--config", config_path, "device JSON file")->required();
  app.add_option("--search-shots", n_search, "shots per bisection trial");
  app.add_option("--final-shots", n_final, "shots for the final check");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--mixing-error", mixing_target,
                 "target ground-state misassignment from mixing");
  app.add_flag("--write", write, "write tuned settings back to the config");

  CLI11_PARSE(app, argc, argv);

  try {
    muxread::DeviceConfig cfg = muxread::load_device_config(config_path);
    ordered_json report;
    report["channels"] = ordered_json::array();
    double product_e_given_pi = 1.0;

    for (auto& ch : cfg.channels) {
      muxread::ChannelPipeline pipe = muxread::build_channel_pipeline(cfg, ch);

      muxread::GeneratorSettings gen = ch.generator;
      gen.snr = pipe.snr_at_eta;
      // Single-event model: a mixing flip changes the assignment only if it
      // fires before the weight midpoint, so the rate that produces a given
      // misassignment probability follows from t_half.
      auto rate_for = [&](double flip) {
        return -std::log1p(-flip) / pipe.t_half;
      };
      gen.mixing_rate = rate_for(mixing_target);

      // Monotone bisection of t_prep against the fidelity target.  If the
      // channel cannot reach the target even with no delay, back the mixing
      // off toward the bottom of the observed band (0.1%) instead.
      double target = ch.readout.p_correct_quoted;
      double lo = 0.0, hi = 1500e-9;
      gen.t_prep = lo;
      TrialResult at_lo = run_trial(gen, pipe.profile, n_search, seed);
      gen.t_prep = hi;
      TrialResult at_hi = run_trial(gen, pipe.profile, n_search, seed);
      if (at_lo.p_correct < target) {
        gen.t_prep = 0.0;
        double m_lo = 0.001, m_hi = mixing_target;
        gen.mixing_rate = rate_for(m_lo);
        TrialResult floor = run_trial(gen, pipe.profile, n_search, seed);
        if (floor.p_correct > target) {
          for (int it = 0; it < 14; ++it) {
            double m = 0.5 * (m_lo + m_hi);
            gen.mixing_rate = rate_for(m);
            TrialResult mid = run_trial(gen, pipe.profile, n_search, seed);
            (mid.p_correct > target ? m_lo : m_hi) = m;
          }
          gen.mixing_rate = rate_for(0.5 * (m_lo + m_hi));
        }
      } else if (at_hi.p_correct > target) {
        gen.t_prep = hi;
      } else {
        for (int it = 0; it < 14; ++it) {
          gen.t_prep = 0.5 * (lo + hi);
          TrialResult mid = run_trial(gen, pipe.profile, n_search, seed);
          (mid.p_correct > target ? lo : hi) = gen.t_prep;
        }
        gen.t_prep = 0.5 * (lo + hi);
      }

      TrialResult fin = run_trial(gen, pipe.profile, n_final, seed + 1);
      muxread::ErrorBudget budget = muxread::error_budget(
          fin.p_e_given_0, fin.p_g_given_pi, gen.snr);
      product_e_given_pi *= 1.0 - fin.p_g_given_pi;

      ordered_json cj;
      cj["name"] = ch.name;
      cj["qubit"] = ch.qubit;
      cj["snr"] = gen.snr;
      cj["dephasing_integral"] = pipe.dephasing_integral;
      cj["t_half_ns"] = muxread::ns_from_sec(pipe.t_half);
      cj["mixing_rate_per_us"] = gen.mixing_rate * 1e-6;
      cj["t_prep_ns"] = muxread::ns_from_sec(gen.t_prep);
      cj["p_correct_target"] = target;
      cj["p_correct"] = fin.p_correct;
      cj["p_e_given_0"] = fin.p_e_given_0;
      cj["p_g_given_pi"] = fin.p_g_given_pi;
      cj["overlap_error"] = budget.overlap;
      cj["mixing_error"] = budget.mixing;
      cj["decay_error"] = budget.decay;
      report["channels"].push_back(std::move(cj));

      ch.generator = gen;
    }

    report["product_p_e_given_pi"] = product_e_given_pi;
    std::cout << report.dump(2) << "\n";

    if (write) {
      muxread::save_device_config(cfg, config_path);
      std::cerr << "wrote tuned settings to " << config_path << "\n";
    }
    return 0;
  } catch (const muxread::invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const muxread::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
}
