#pragma once

// Multiplexed-readout bookkeeping: assignment matrices over all 2^N
// preparation patterns, per-qubit marginals, the cross-fidelity matrix, and
// shot-to-shot correlation estimates.
//
// Pattern indices encode qubit 0 as the most significant bit: for three
// qubits the pattern "q0 excited, others ground" is index 0b100 = 4.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "muxread/errors.hpp"
#include "muxread/readout_signal.hpp"

namespace muxread {

inline std::size_t pattern_dim(std::size_t n_qubits) {
  if (n_qubits == 0 || n_qubits > 20)
    throw invalid_input("pattern_dim: unsupported qubit count");
  return static_cast<std::size_t>(1) << n_qubits;
}

inline bool pattern_bit(std::size_t pattern, std::size_t qubit,
                        std::size_t n_qubits) {
  return (pattern >> (n_qubits - 1 - qubit)) & 1u;
}

inline std::vector<QubitState> pattern_states(std::size_t pattern,
                                              std::size_t n_qubits) {
  std::vector<QubitState> s(n_qubits);
  for (std::size_t q = 0; q < n_qubits; ++q)
    s[q] = pattern_bit(pattern, q, n_qubits) ? QubitState::excited
                                             : QubitState::ground;
  return s;
}

// Conditional assignment probabilities P(assigned | prepared), row-major:
// p[prepared * dim + assigned].
struct AssignmentMatrix {
  std::size_t n_qubits = 0;
  std::size_t shots_per_pattern = 0;
  std::vector<double> p;

  std::size_t dim() const { return pattern_dim(n_qubits); }
  double at(std::size_t prep, std::size_t assigned) const {
    return p[prep * dim() + assigned];
  }

  // P(qubit q assigned excited | preparation row).
  double excited_marginal(std::size_t prep, std::size_t q) const {
    double sum = 0.0;
    for (std::size_t a = 0; a < dim(); ++a)
      if (pattern_bit(a, q, n_qubits)) sum += at(prep, a);
    return sum;
  }
};

// Streaming counts -> probabilities, so shots never need to be held in
// memory all at once.
class AssignmentAccumulator {
 public:
  explicit AssignmentAccumulator(std::size_t n_qubits)
      : n_qubits_(n_qubits),
        counts_(pattern_dim(n_qubits) * pattern_dim(n_qubits), 0) {}

  void add(std::size_t prepared, std::size_t assigned) {
    std::size_t d = pattern_dim(n_qubits_);
    if (prepared >= d || assigned >= d)
      throw invalid_input("AssignmentAccumulator: pattern out of range");
    ++counts_[prepared * d + assigned];
  }

  AssignmentMatrix normalized() const {
    std::size_t d = pattern_dim(n_qubits_);
    AssignmentMatrix m;
    m.n_qubits = n_qubits_;
    m.p.resize(d * d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      std::uint64_t total = 0;
      for (std::size_t a = 0; a < d; ++a) total += counts_[r * d + a];
      if (total == 0)
        throw invalid_input("AssignmentAccumulator: preparation row " +
                            std::to_string(r) + " has no shots");
      for (std::size_t a = 0; a < d; ++a)
        m.p[r * d + a] = static_cast<double>(counts_[r * d + a]) /
                         static_cast<double>(total);
    }
    return m;
  }

 private:
  std::size_t n_qubits_;
  std::vector<std::uint64_t> counts_;
};

// Pattern index assigned to one multiplexed shot by per-qubit thresholds.
inline std::size_t classify_pattern(const double* values,
                                    const std::vector<double>& thresholds) {
  std::size_t pattern = 0;
  for (std::size_t q = 0; q < thresholds.size(); ++q) {
    pattern <<= 1;
    if (classify(values[q], thresholds[q])) pattern |= 1u;
  }
  return pattern;
}

// Per-qubit thresholds calibrated from dedicated single-qubit reference
// batches (the marginal statistics are independent across qubits, so
// single-qubit calibration carries over to the multiplexed case).
inline std::vector<double> calibrate_thresholds(
    const std::vector<GeneratorSettings>& qubits,
    const std::vector<WeightProfile>& profiles, std::size_t n_shots,
    std::uint64_t seed, bool herald = true) {
  std::vector<double> thr(qubits.size());
  for (std::size_t q = 0; q < qubits.size(); ++q) {
    ShotBatch bg = generate_shots({qubits[q]}, {profiles[q]},
                                  {QubitState::ground}, n_shots, seed,
                                  0xC0DE0000u + q, herald);
    ShotBatch be = generate_shots({qubits[q]}, {profiles[q]},
                                  {QubitState::excited}, n_shots, seed,
                                  0xC0DE8000u + q, herald);
    thr[q] = optimize_threshold(bg.values, be.values);
  }
  return thr;
}

// Drive the generator through every preparation pattern and tally the
// assignment outcomes.  The row key ties each pattern to its own RNG
// substream, so rows are reproducible independently of evaluation order.
inline AssignmentMatrix measure_assignment_matrix(
    const std::vector<GeneratorSettings>& qubits,
    const std::vector<WeightProfile>& profiles,
    const std::vector<double>& thresholds, std::size_t shots_per_pattern,
    std::uint64_t seed, bool herald = true) {
  if (thresholds.size() != qubits.size())
    throw invalid_input("measure_assignment_matrix: one threshold per qubit");
  std::size_t nq = qubits.size();
  AssignmentAccumulator acc(nq);
  for (std::size_t prep = 0; prep < pattern_dim(nq); ++prep) {
    ShotBatch batch =
        generate_shots(qubits, profiles, pattern_states(prep, nq),
                       shots_per_pattern, seed, prep, herald);
    for (std::size_t s = 0; s < batch.n_shots; ++s)
      acc.add(prep, classify_pattern(&batch.values[s * nq], thresholds));
  }
  AssignmentMatrix m = acc.normalized();
  m.shots_per_pattern = shots_per_pattern;
  return m;
}

// Cross-fidelity matrix: F[i][j] = 1 - P(e_i | j prepared g) -
// P(g_i | j prepared e), with both probabilities averaged over the 2^(N-1)
// preparations of the remaining qubits.  Diagonal entries are the usual
// single-qubit readout fidelities; off-diagonal entries vanish when readout
// of qubit i is insensitive to the state of qubit j.
inline std::vector<std::vector<double>> cross_fidelity(
    const AssignmentMatrix& m) {
  std::size_t n = m.n_qubits;
  std::size_t d = m.dim();
  std::vector<std::vector<double>> f(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double p_e_given_g = 0.0, p_g_given_e = 0.0;
      double n_half = static_cast<double>(d / 2);
      for (std::size_t r = 0; r < d; ++r) {
        double p_e = m.excited_marginal(r, i);
        if (pattern_bit(r, j, n))
          p_g_given_e += (1.0 - p_e) / n_half;
        else
          p_e_given_g += p_e / n_half;
      }
      f[i][j] = 1.0 - p_e_given_g - p_g_given_e;
    }
  }
  return f;
}

// Pearson correlations of the assigned sigma-z values (ground -> +1,
// excited -> -1) across the shots of one preparation.  Qubits whose outcome
// never varies carry no correlation information: they are flagged and their
// off-diagonal entries set to zero.
struct CorrelationResult {
  std::vector<std::vector<double>> C;
  std::vector<std::uint8_t> zero_variance;
};

inline CorrelationResult correlation_matrix(
    const std::vector<std::uint8_t>& assigned_bits, std::size_t n_shots,
    std::size_t n_qubits) {
  if (assigned_bits.size() != n_shots * n_qubits || n_shots < 2)
    throw invalid_input("correlation_matrix: bad shot table");
  std::vector<double> mean(n_qubits, 0.0);
  for (std::size_t s = 0; s < n_shots; ++s)
    for (std::size_t q = 0; q < n_qubits; ++q)
      mean[q] += assigned_bits[s * n_qubits + q] ? -1.0 : 1.0;
  for (double& v : mean) v /= static_cast<double>(n_shots);

  std::vector<std::vector<double>> cov(n_qubits,
                                       std::vector<double>(n_qubits, 0.0));
  for (std::size_t s = 0; s < n_shots; ++s) {
    for (std::size_t i = 0; i < n_qubits; ++i) {
      double zi = (assigned_bits[s * n_qubits + i] ? -1.0 : 1.0) - mean[i];
      for (std::size_t j = i; j < n_qubits; ++j) {
        double zj = (assigned_bits[s * n_qubits + j] ? -1.0 : 1.0) - mean[j];
        cov[i][j] += zi * zj;
      }
    }
  }

  CorrelationResult out;
  out.zero_variance.assign(n_qubits, 0);
  out.C.assign(n_qubits, std::vector<double>(n_qubits, 0.0));
  for (std::size_t i = 0; i < n_qubits; ++i)
    if (cov[i][i] == 0.0) out.zero_variance[i] = 1;
  for (std::size_t i = 0; i < n_qubits; ++i) {
    out.C[i][i] = 1.0;
    for (std::size_t j = i + 1; j < n_qubits; ++j) {
      if (!out.zero_variance[i] && !out.zero_variance[j]) {
        double c = cov[i][j] / std::sqrt(cov[i][i] * cov[j][j]);
        out.C[i][j] = c;
        out.C[j][i] = c;
      }
    }
  }
  return out;
}

}  // namespace muxread
