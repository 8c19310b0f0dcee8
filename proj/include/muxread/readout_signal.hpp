#pragma once

// Signal-level model of single-shot dispersive readout: matched-filter
// weights from conditional field traces, a fast stochastic shot generator
// with decay/mixing/thermal channels, double-Gaussian histogram fits, and
// the assignment-error bookkeeping built on top of them.
//
// The generator works in matched-filter output units: a shot is one number
// per qubit, distributed N(-snr/2, 1) for a qubit that stays in its ground
// state and N(+snr/2, 1) for one that stays excited.  A state flip at time t
// inside the integration window lands between the two means, weighted by how
// much filter weight had accumulated by t.  Every (shot, qubit) pair draws
// from its own counter-based RNG substream, so results are bit-identical for
// any thread count or evaluation order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "muxread/detail/parallel.hpp"
#include "muxread/detail/rng.hpp"
#include "muxread/dynamics.hpp"
#include "muxread/errors.hpp"

namespace muxread {

// How the readout signal's discriminating power accrues across the
// integration window: cdf[i] is the fraction of total filter weight
// accumulated by time i * dt, rising from 0 to 1.
struct WeightProfile {
  double dt = 0.0;
  std::vector<double> cdf;

  double duration() const {
    return cdf.empty() ? 0.0 : static_cast<double>(cdf.size() - 1) * dt;
  }

  // Time by which half the filter weight has accumulated (interpolated).
  double half_time() const {
    for (std::size_t i = 1; i < cdf.size(); ++i) {
      if (cdf[i] >= 0.5) {
        double lo = cdf[i - 1], hi = cdf[i];
        double frac = hi > lo ? (0.5 - lo) / (hi - lo) : 0.0;
        return (static_cast<double>(i - 1) + frac) * dt;
      }
    }
    throw numerical_error("WeightProfile: cdf never reaches 0.5");
  }

  // Fraction of weight accumulated by time t (clamped to [0, 1]).  The
  // upper guard comes first so that infinite times (disabled decay clocks)
  // never reach the float-to-index cast.
  double at(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= duration()) return 1.0;
    double x = t / dt;
    auto i = static_cast<std::size_t>(x);
    if (i + 1 >= cdf.size()) return 1.0;
    double frac = x - static_cast<double>(i);
    return cdf[i] + frac * (cdf[i + 1] - cdf[i]);
  }
};

// Matched-filter weights w(t) = conj(b_e(t) - b_g(t)), normalized to unit
// total power: sum |w|^2 dt = 1.
struct MatchedFilter {
  double dt = 0.0;
  std::vector<cplx> w;

  WeightProfile profile() const {
    WeightProfile p;
    p.dt = dt;
    p.cdf.resize(w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += std::norm(w[i]) * dt;
      p.cdf[i] = acc;
    }
    for (double& c : p.cdf) c /= acc;
    return p;
  }
};

inline MatchedFilter build_matched_filter(const FieldTrace& g,
                                          const FieldTrace& e) {
  detail::check_same_grid(g, e);
  MatchedFilter f;
  f.dt = g.dt;
  f.w.resize(g.size());
  double power = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    f.w[i] = std::conj(e.b[i] - g.b[i]);
    power += std::norm(f.w[i]) * g.dt;
  }
  if (power <= 0.0)
    throw invalid_input("build_matched_filter: conditional traces are "
                        "identical, nothing to discriminate");
  double scale = 1.0 / std::sqrt(power);
  for (cplx& v : f.w) v *= scale;
  return f;
}

// Uniform weight accumulation over a window of length tau: the profile of a
// boxcar filter, useful when no traces are available.
inline WeightProfile flat_weight_profile(double tau, double dt = 1e-9) {
  if (!(tau > 0.0) || !(dt > 0.0) || tau < dt)
    throw invalid_input("flat_weight_profile: bad window");
  auto n = static_cast<std::size_t>(std::llround(tau / dt));
  WeightProfile p;
  p.dt = dt;
  p.cdf.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    p.cdf[i] = static_cast<double>(i) / static_cast<double>(n);
  return p;
}

// Stochastic channels for one qubit's readout.
struct GeneratorSettings {
  double snr = 0.0;          // mean separation in noise-sigma units
  double T1 = 0.0;           // energy relaxation time, s (<=0: no decay)
  double mixing_rate = 0.0;  // ground -> excited rate inside the window, 1/s
  double p_therm = 0.0;      // thermal excited population before heralding
  double t_prep = 0.0;       // decay exposure between preparation and window, s
};

// A batch of simulated shots for one preparation pattern.  Values are stored
// row-major: values[shot * n_qubits + q].  final_excited records the state at
// the end of the window (diagnostics only; assignment must use the values).
struct ShotBatch {
  std::size_t n_shots = 0;
  std::size_t n_qubits = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> final_excited;
  double expected_discard = 0.0;  // heralding discard fraction (analytic)
};

// Simulate n_shots multiplexed single-shot readouts of the given preparation
// pattern.  With herald = true the shots are post-selection survivors: every
// qubit starts in its ground state and expected_discard reports the fraction
// of raw shots heralding would have dropped.  Each transition channel fires
// at most once per window (single-event model; the rates involved make
// double transitions a sub-0.01% correction).
inline ShotBatch generate_shots(const std::vector<GeneratorSettings>& qubits,
                                const std::vector<WeightProfile>& profiles,
                                const std::vector<QubitState>& prepared,
                                std::size_t n_shots, std::uint64_t seed,
                                std::uint64_t row_key, bool herald = true) {
  std::size_t nq = qubits.size();
  if (profiles.size() != nq || prepared.size() != nq)
    throw invalid_input("generate_shots: per-qubit inputs disagree in size");
  if (nq == 0 || n_shots == 0)
    throw invalid_input("generate_shots: nothing to generate");

  ShotBatch batch;
  batch.n_shots = n_shots;
  batch.n_qubits = nq;
  batch.values.resize(n_shots * nq);
  batch.final_excited.resize(n_shots * nq);
  double keep = 1.0;
  for (const auto& q : qubits) keep *= 1.0 - q.p_therm;
  batch.expected_discard = 1.0 - keep;

  detail::parallel_for(n_shots, [&](std::size_t shot) {
    for (std::size_t q = 0; q < nq; ++q) {
      const GeneratorSettings& gs = qubits[q];
      const WeightProfile& wp = profiles[q];
      detail::Rng rng(seed, row_key, shot, q);

      bool excited = false;
      if (!herald && gs.p_therm > 0.0)
        excited = rng.uniform() < gs.p_therm;
      if (prepared[q] == QubitState::excited) excited = !excited;

      double tau = wp.duration();
      double f_excited;  // fraction of window weight spent excited
      if (excited) {
        double t_d = gs.T1 > 0.0 ? rng.exponential(gs.T1)
                                 : std::numeric_limits<double>::infinity();
        // Decay clock starts when the preparation pulse ends; the window
        // opens t_prep later.
        f_excited = t_d <= gs.t_prep ? 0.0 : wp.at(t_d - gs.t_prep);
        excited = t_d > gs.t_prep + tau;
      } else {
        double t_m = gs.mixing_rate > 0.0
                         ? rng.exponential(1.0 / gs.mixing_rate)
                         : std::numeric_limits<double>::infinity();
        f_excited = t_m >= tau ? 0.0 : 1.0 - wp.at(t_m);
        excited = t_m < tau;
      }

      double mu = gs.snr * (f_excited - 0.5);
      batch.values[shot * nq + q] = mu + rng.normal();
      batch.final_excited[shot * nq + q] = excited ? 1 : 0;
    }
  });
  return batch;
}

// Two-Gaussian decomposition of a 1-D histogram with a shared width,
// estimated by expectation-maximization.
struct DoubleGaussianFit {
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  double sigma = 0.0;
  double weight_lo = 0.0;  // mixture fraction of the low component
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // components merged; means set to the pooled mean
};

inline DoubleGaussianFit fit_double_gaussian(const std::vector<double>& x,
                                             int max_iter = 500,
                                             double rel_tol = 1e-12) {
  if (x.size() < 8)
    throw invalid_input("fit_double_gaussian: too few samples");
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    double idx = p * static_cast<double>(sorted.size() - 1);
    auto i = static_cast<std::size_t>(idx);
    if (i + 1 >= sorted.size()) return sorted.back();
    double frac = idx - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
  };

  double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;

  DoubleGaussianFit fit;
  fit.mu_lo = quantile(0.02);
  fit.mu_hi = quantile(0.98);
  fit.sigma = std::sqrt(var) * 0.5;
  fit.weight_lo = 0.5;
  if (fit.sigma == 0.0)
    throw invalid_input("fit_double_gaussian: zero-variance input");

  std::vector<double> resp(x.size());
  for (int it = 0; it < max_iter; ++it) {
    double inv2s2 = 1.0 / (2.0 * fit.sigma * fit.sigma);
    double sum_r = 0.0, sum_rx = 0.0, sum_qx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double dlo = x[i] - fit.mu_lo, dhi = x[i] - fit.mu_hi;
      // Likelihood ratio evaluated stably in the log domain.
      double log_ratio = (dhi * dhi - dlo * dlo) * inv2s2 +
                         std::log(fit.weight_lo) -
                         std::log1p(-fit.weight_lo);
      double r = 1.0 / (1.0 + std::exp(-log_ratio));
      resp[i] = r;
      sum_r += r;
      sum_rx += r * x[i];
      sum_qx += (1.0 - r) * x[i];
    }
    if (sum_r < 1e-12 || n - sum_r < 1e-12) {
      // One component starved: the histogram is single-peaked.
      fit.degenerate = true;
      fit.mu_lo = fit.mu_hi = mean;
      fit.sigma = std::sqrt(var);
      fit.weight_lo = sum_r / n;
      fit.converged = true;
      fit.iterations = it + 1;
      return fit;
    }
    double mu_lo = sum_rx / sum_r;
    double mu_hi = sum_qx / (n - sum_r);
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double dlo = x[i] - mu_lo, dhi = x[i] - mu_hi;
      ss += resp[i] * dlo * dlo + (1.0 - resp[i]) * dhi * dhi;
    }
    double sigma = std::sqrt(ss / n);
    double w = sum_r / n;

    double move = std::abs(mu_lo - fit.mu_lo) + std::abs(mu_hi - fit.mu_hi) +
                  std::abs(sigma - fit.sigma) + std::abs(w - fit.weight_lo);
    double scale = std::abs(mu_hi - mu_lo) + sigma;
    fit.mu_lo = mu_lo;
    fit.mu_hi = mu_hi;
    fit.sigma = sigma;
    fit.weight_lo = w;
    fit.iterations = it + 1;
    if (move < rel_tol * scale) {
      fit.converged = true;
      break;
    }
  }
  if (fit.mu_hi < fit.mu_lo) {
    std::swap(fit.mu_hi, fit.mu_lo);
    fit.weight_lo = 1.0 - fit.weight_lo;
  }

  // EM will happily split a single peak into two overlapping components, so
  // degeneracy is decided statistically: keep the two-component model only
  // if it beats a single Gaussian by more than the BIC penalty for its two
  // extra parameters.
  double ll_mix = 0.0, ll_one = 0.0;
  double inv2s2 = 1.0 / (2.0 * fit.sigma * fit.sigma);
  double log_norm_mix = -std::log(fit.sigma * std::sqrt(2.0 * M_PI));
  double sig1 = std::sqrt(var);
  double log_norm_one = -std::log(sig1 * std::sqrt(2.0 * M_PI));
  for (double v : x) {
    double dlo = v - fit.mu_lo, dhi = v - fit.mu_hi;
    double p = fit.weight_lo * std::exp(-dlo * dlo * inv2s2) +
               (1.0 - fit.weight_lo) * std::exp(-dhi * dhi * inv2s2);
    ll_mix += std::log(p) + log_norm_mix;
    double d1 = v - mean;
    ll_one += -d1 * d1 / (2.0 * var) + log_norm_one;
  }
  if (2.0 * (ll_mix - ll_one) < 2.0 * std::log(n)) {
    fit.degenerate = true;
    fit.mu_lo = fit.mu_hi = mean;
    fit.sigma = sig1;
  }
  return fit;
}

inline double snr_from_histogram(const DoubleGaussianFit& fit) {
  if (fit.degenerate) return 0.0;
  if (!(fit.sigma > 0.0))
    throw numerical_error("snr_from_histogram: non-positive width");
  return (fit.mu_hi - fit.mu_lo) / fit.sigma;
}

// Readout efficiency (signal power extracted per unit of measurement-induced
// dephasing).  Estimator noise can push the value slightly above 1; anything
// beyond `tol` over unity means the snr and dephasing inputs are inconsistent.
inline double measurement_efficiency(double snr, double dephasing_integral,
                                     double tol = 0.02) {
  if (!(dephasing_integral > 0.0))
    throw invalid_input("measurement_efficiency: dephasing must be positive");
  double eta = snr * snr / (4.0 * dephasing_integral);
  if (eta > 1.0 + tol)
    throw numerical_error("measurement_efficiency: efficiency above unity; "
                          "snr and dephasing inputs are inconsistent");
  return eta;
}

// Threshold minimizing the average of the two misassignment rates, found by
// sweeping midpoints of the pooled order statistics.  Ties resolve to the
// smallest threshold.
inline double optimize_threshold(const std::vector<double>& ground,
                                 const std::vector<double>& excited) {
  if (ground.empty() || excited.empty())
    throw invalid_input("optimize_threshold: empty sample set");
  std::vector<double> g = ground, e = excited;
  std::sort(g.begin(), g.end());
  std::sort(e.begin(), e.end());
  std::vector<double> all;
  all.reserve(g.size() + e.size());
  all.insert(all.end(), g.begin(), g.end());
  all.insert(all.end(), e.begin(), e.end());
  std::sort(all.begin(), all.end());

  auto error_at = [&](double thr) {
    // Misassign ground shots above the threshold, excited shots at or below.
    double ng = static_cast<double>(g.end() -
                                    std::upper_bound(g.begin(), g.end(), thr));
    double ne = static_cast<double>(std::upper_bound(e.begin(), e.end(), thr) -
                                    e.begin());
    return 0.5 * (ng / static_cast<double>(g.size()) +
                  ne / static_cast<double>(e.size()));
  };

  double best_thr = all.front() - 1.0;
  double best_err = error_at(best_thr);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    if (all[i] == all[i + 1]) continue;
    double thr = 0.5 * (all[i] + all[i + 1]);
    double err = error_at(thr);
    if (err < best_err - 1e-15) {
      best_err = err;
      best_thr = thr;
    }
  }
  return best_thr;
}

inline bool classify(double value, double threshold) {
  return value > threshold;
}

// Decomposition of the average assignment error 1 - P_correct, with
// P_correct = 1 - (P(e|g-prep) + P(g|e-prep)) / 2.  The Gaussian-overlap term
// afflicts both preparations equally and is counted once; what remains of
// each preparation's error is attributed to state flips, halved by the same
// averaging.  Slightly negative flip terms can occur when sampling noise
// pushes a measured error below the overlap floor.
struct ErrorBudget {
  double overlap = 0.0;
  double mixing = 0.0;
  double decay = 0.0;
  double total = 0.0;
};

inline double gaussian_overlap_error(double snr) {
  return 0.5 * std::erfc(snr / (2.0 * std::sqrt(2.0)));
}

inline ErrorBudget error_budget(double p_e_given_g, double p_g_given_e,
                                double snr) {
  ErrorBudget b;
  b.overlap = gaussian_overlap_error(snr);
  b.mixing = 0.5 * (p_e_given_g - b.overlap);
  b.decay = 0.5 * (p_g_given_e - b.overlap);
  b.total = 0.5 * (p_e_given_g + p_g_given_e);
  return b;
}

}  // namespace muxread
