// Tests for the multiplexed assignment analysis.  The index bookkeeping is
// pinned by an analytic tensor-product oracle: for independent qubits the
// full assignment matrix factorizes into per-qubit 2x2 matrices, and the
// cross-fidelity matrix is then known in closed form.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "muxread/multi_qubit.hpp"

namespace {

using muxread::AssignmentMatrix;
using muxread::GeneratorSettings;
using muxread::QubitState;
using muxread::WeightProfile;

GeneratorSettings clean_settings(double snr) {
  GeneratorSettings s;
  s.snr = snr;
  return s;
}

std::vector<WeightProfile> flat_profiles(std::size_t n) {
  return std::vector<WeightProfile>(n, muxread::flat_weight_profile(800e-9));
}

// Assignment matrix of independent qubits with per-qubit error rates
// e0 = P(assigned e | prepared g) and e1 = P(assigned g | prepared e),
// using the library's bit convention (qubit 0 = MSB).
AssignmentMatrix tensor_product_matrix(const std::vector<double>& e0,
                                       const std::vector<double>& e1) {
  std::size_t n = e0.size();
  std::size_t d = muxread::pattern_dim(n);
  AssignmentMatrix m;
  m.n_qubits = n;
  m.p.assign(d * d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t a = 0; a < d; ++a) {
      double p = 1.0;
      for (std::size_t q = 0; q < n; ++q) {
        bool prep_e = muxread::pattern_bit(r, q, n);
        bool asg_e = muxread::pattern_bit(a, q, n);
        if (prep_e)
          p *= asg_e ? 1.0 - e1[q] : e1[q];
        else
          p *= asg_e ? e0[q] : 1.0 - e0[q];
      }
      m.p[r * d + a] = p;
    }
  }
  return m;
}

TEST(Patterns, BitConventionPutsQubitZeroInTheMsb) {
  // Pattern 0b100 on three qubits: only qubit 0 is excited.
  EXPECT_TRUE(muxread::pattern_bit(4, 0, 3));
  EXPECT_FALSE(muxread::pattern_bit(4, 1, 3));
  EXPECT_FALSE(muxread::pattern_bit(4, 2, 3));

  auto states = muxread::pattern_states(5, 3);  // 0b101
  EXPECT_EQ(states[0], QubitState::excited);
  EXPECT_EQ(states[1], QubitState::ground);
  EXPECT_EQ(states[2], QubitState::excited);

  // classify_pattern builds the index in the same order.
  double values[3] = {5.0, -5.0, 5.0};
  std::vector<double> thr(3, 0.0);
  EXPECT_EQ(muxread::classify_pattern(values, thr), 5u);

  EXPECT_THROW(muxread::pattern_dim(0), muxread::invalid_input);
}

TEST(CrossFidelity, TensorProductOracle) {
  std::vector<double> e0{0.02, 0.05, 0.01};
  std::vector<double> e1{0.04, 0.03, 0.07};
  AssignmentMatrix m = tensor_product_matrix(e0, e1);

  // Rows of the analytic matrix are exactly stochastic.
  for (std::size_t r = 0; r < m.dim(); ++r) {
    double sum = 0.0;
    for (std::size_t a = 0; a < m.dim(); ++a) sum += m.at(r, a);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }

  auto f = muxread::cross_fidelity(m);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j)
        EXPECT_NEAR(f[i][j], 1.0 - e0[i] - e1[i], 1e-12);
      else
        EXPECT_NEAR(f[i][j], 0.0, 1e-12) << i << "," << j;
    }
  }

  // Marginals agree with the per-qubit rates for every preparation.
  for (std::size_t r = 0; r < m.dim(); ++r)
    for (std::size_t q = 0; q < 3; ++q) {
      double expect = muxread::pattern_bit(r, q, 3) ? 1.0 - e1[q] : e0[q];
      EXPECT_NEAR(m.excited_marginal(r, q), expect, 1e-12);
    }
}

TEST(MeasuredMatrix, RowsAreStochasticAndDiagonalDominant) {
  std::vector<GeneratorSettings> qs(3, clean_settings(5.0));
  qs[1].T1 = 6e-6;
  qs[2].mixing_rate = 3e3;
  auto profiles = flat_profiles(3);
  std::vector<double> thr =
      muxread::calibrate_thresholds(qs, profiles, 20000, 97);

  AssignmentMatrix m =
      muxread::measure_assignment_matrix(qs, profiles, thr, 4000, 97);
  for (std::size_t r = 0; r < m.dim(); ++r) {
    double sum = 0.0, biggest = 0.0;
    for (std::size_t a = 0; a < m.dim(); ++a) {
      sum += m.at(r, a);
      biggest = std::max(biggest, m.at(r, a));
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(biggest, m.at(r, r)) << "row " << r;
    EXPECT_GT(m.at(r, r), 0.8);
  }
}

TEST(MeasuredMatrix, MarginalsMatchDirectRecount) {
  std::vector<GeneratorSettings> qs(2, clean_settings(4.5));
  qs[0].T1 = 8e-6;
  auto profiles = flat_profiles(2);
  std::vector<double> thr(2, 0.0);
  std::size_t n = 3000;

  AssignmentMatrix m =
      muxread::measure_assignment_matrix(qs, profiles, thr, n, 1234);

  // Regenerate the same shots (same seed and row keys) and count marginals
  // by hand; they must agree exactly.
  for (std::size_t prep = 0; prep < m.dim(); ++prep) {
    auto batch = muxread::generate_shots(
        qs, profiles, muxread::pattern_states(prep, 2), n, 1234, prep, true);
    for (std::size_t q = 0; q < 2; ++q) {
      double count = 0.0;
      for (std::size_t s = 0; s < n; ++s)
        if (muxread::classify(batch.values[s * 2 + q], thr[q])) count += 1.0;
      EXPECT_DOUBLE_EQ(m.excited_marginal(prep, q),
                       count / static_cast<double>(n));
    }
  }
}

TEST(MeasuredMatrix, PerfectReadoutGivesIdentity) {
  std::vector<GeneratorSettings> qs(2, clean_settings(40.0));
  auto profiles = flat_profiles(2);
  std::vector<double> thr(2, 0.0);
  AssignmentMatrix m =
      muxread::measure_assignment_matrix(qs, profiles, thr, 2000, 5);
  for (std::size_t r = 0; r < m.dim(); ++r)
    for (std::size_t a = 0; a < m.dim(); ++a)
      EXPECT_DOUBLE_EQ(m.at(r, a), r == a ? 1.0 : 0.0);
}

TEST(CrossFidelity, CleanIndependentQubitsMeasureNearIdentity) {
  std::vector<GeneratorSettings> qs(3, clean_settings(6.0));
  auto profiles = flat_profiles(3);
  std::vector<double> thr(3, 0.0);
  AssignmentMatrix m =
      muxread::measure_assignment_matrix(qs, profiles, thr, 4000, 31);
  auto f = muxread::cross_fidelity(m);
  double overlap = muxread::gaussian_overlap_error(6.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(f[i][i], 1.0 - 2.0 * overlap, 5e-3);
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_LT(std::abs(f[i][j]), 0.01);
  }
}

TEST(Correlations, SyntheticBitPatterns) {
  std::size_t n = 20000;
  muxread::detail::Rng rng(8, 1);
  std::vector<std::uint8_t> bits(n * 4);
  for (std::size_t s = 0; s < n; ++s) {
    std::uint8_t a = rng.uniform() < 0.5 ? 1 : 0;
    std::uint8_t b = rng.uniform() < 0.5 ? 1 : 0;
    bits[s * 4 + 0] = a;
    bits[s * 4 + 1] = a;        // perfectly correlated with qubit 0
    bits[s * 4 + 2] = b;        // independent of qubit 0
    bits[s * 4 + 3] = 0;        // frozen: no variance
  }
  auto res = muxread::correlation_matrix(bits, n, 4);
  EXPECT_DOUBLE_EQ(res.C[0][0], 1.0);
  EXPECT_NEAR(res.C[0][1], 1.0, 1e-12);
  EXPECT_NEAR(res.C[0][2], 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_TRUE(res.zero_variance[3]);
  EXPECT_FALSE(res.zero_variance[0]);
  EXPECT_DOUBLE_EQ(res.C[0][3], 0.0);
  EXPECT_DOUBLE_EQ(res.C[3][3], 1.0);
  EXPECT_DOUBLE_EQ(res.C[1][0], res.C[0][1]);

  // Anti-correlation shows up with the expected sign.
  for (std::size_t s = 0; s < n; ++s) bits[s * 4 + 1] = 1 - bits[s * 4 + 0];
  res = muxread::correlation_matrix(bits, n, 4);
  EXPECT_NEAR(res.C[0][1], -1.0, 1e-12);
}

TEST(Correlations, RejectsMalformedTables) {
  EXPECT_THROW(muxread::correlation_matrix({0, 1, 0}, 2, 2),
               muxread::invalid_input);
  EXPECT_THROW(muxread::correlation_matrix({0, 1}, 1, 2),
               muxread::invalid_input);
}

TEST(Accumulator, GuardsAgainstMisuse) {
  muxread::AssignmentAccumulator acc(2);
  EXPECT_THROW(acc.add(4, 0), muxread::invalid_input);
  acc.add(0, 0);
  // Rows 1..3 have no counts yet.
  EXPECT_THROW(acc.normalized(), muxread::invalid_input);
}

}  // namespace
