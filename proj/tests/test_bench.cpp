// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "specdec/bench.hpp"
#include "test_util.hpp"

namespace specdec {
namespace {

IterationRecord rec(int emitted) { return IterationRecord{emitted, emitted, emitted, 1.0, 2.0}; }

// Expected emitted count under vanilla verification, by enumerating all 2^k
// corruption patterns.
double enumerate_expected_accept(int k, double p) {
  double expected = 0.0;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    double weight = 1.0;
    int first = k;
    for (int i = 0; i < k; ++i) {
      const bool corrupted = (mask >> i) & 1u;
      weight *= corrupted ? p : 1.0 - p;
      if (corrupted && first == k) first = i + 1;
    }
    expected += weight * first;
  }
  return expected;
}

DecodeConfig vanilla(int k, int max_len) {
  DecodeConfig cfg;
  cfg.strategy = Strategy::kSpecDecVanilla;
  cfg.k = k;
  cfg.max_len = max_len;
  return cfg;
}

TEST(ComputeTok, Examples) {
  const std::vector<IterationRecord> r{rec(3), rec(5), rec(2)};
  EXPECT_DOUBLE_EQ(compute_tok(r), 10.0 / 3.0);
  const NgramModel m = random_model(10, 2, 0.5, 1, false);
  EXPECT_DOUBLE_EQ(compute_tok(ar_greedy_decode(m, {}, 40).iterations), 1.0);
  SelfRolloutDrafter d(m);
  EXPECT_DOUBLE_EQ(compute_tok(specdec_decode(m, d, {}, vanilla(25, 50)).iterations), 25.0);
  try {
    compute_tok({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyRecords);
  }
}

TEST(EstimateLatency, Examples) {
  EXPECT_NEAR(estimate_latency(100, 8.23, CostModel{5.21, 10.0, 1.0}), 184.81, 0.01);
  EXPECT_NEAR(estimate_latency(100, 8.23, CostModel{5.21, 10.0, 1.0}), 100.0 / 8.23 * 15.21,
              1e-12);
  EXPECT_DOUBLE_EQ(estimate_latency(40, 40, CostModel{1.5, 2.5, 1.0}), 4.0);
  EXPECT_DOUBLE_EQ(estimate_latency(30, 3, CostModel{0.0, 2.0, 1.0}), 20.0);
  try {
    estimate_latency(10, 0.0, CostModel{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonpositiveTok);
  }
}

TEST(ExpectedAccept, ClosedFormMatchesEnumeration) {
  for (int k = 1; k <= 12; ++k) {
    for (double p : {0.0, 0.05, 0.2, 0.5, 0.9, 1.0}) {
      EXPECT_NEAR(expected_accept_noisy_oracle(k, p), enumerate_expected_accept(k, p), 1e-12)
          << "k=" << k << " p=" << p;
    }
  }
}

TEST(ExpectedAccept, LimitsAndBounds) {
  EXPECT_DOUBLE_EQ(expected_accept_noisy_oracle(7, 0.0), 7.0);
  EXPECT_DOUBLE_EQ(expected_accept_noisy_oracle(7, 1.0), 1.0);
  EXPECT_NEAR(expected_accept_noisy_oracle(2, 0.2), 1.8, 1e-12);
  double prev = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double e = expected_accept_noisy_oracle(k, 0.2);
    EXPECT_GE(e, prev - 1e-12);
    EXPECT_LE(e, 1.0 / 0.2 + 1e-12);
    prev = e;
  }
  EXPECT_NEAR(prev, 5.0, 1e-9);
}

TEST(LatencyIdentity, HoldsForEveryRun) {
  const CostModel costs{0.7, 2.3, 1.9};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const NgramModel target = random_model(9, 2, 0.6, seed);
    NoisyOracleDrafter d(target, 0.25, RngStream(seed, 0));
    DecodeConfig cfg = vanilla(1 + static_cast<int>(seed % 9), 70);
    if (seed % 2) cfg.strategy = Strategy::kSpecDecRelaxed;
    const DecodeResult r = specdec_decode(target, d, {}, cfg, costs);
    const double modeled = modeled_cost(r.iterations);
    const double estimated =
        estimate_latency(static_cast<double>(r.output.size()), compute_tok(r.iterations), costs);
    EXPECT_NEAR(estimated, modeled, 1e-9 * modeled);
  }
}

TEST(Histogram, BucketsExample) {
  const std::vector<double> speedups{1.2, 1.3, 2.9};
  const auto h = bucket_speedups(speedups, 0.5);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0], (HistogramBucket{1.0, 1.5, 2}));
  EXPECT_EQ(h[1], (HistogramBucket{2.5, 3.0, 1}));
  EXPECT_THROW(bucket_speedups(speedups, 0.0), Error);
}

class CorpusFixture : public ::testing::Test {
 protected:
  CorpusFixture()
      : target_(random_model(12, 2, 0.5, 3, false)), corpus_(testing::random_corpus(12, 20, 5)) {}

  RunReport report(const DecodeConfig& cfg, const DrafterFactory& factory,
                   const CostModel& costs = {}) const {
    DecodeConfig ar = cfg;
    ar.strategy = Strategy::kArGreedy;
    const CorpusRun baseline = decode_corpus_serial(target_, factory, corpus_, ar, costs);
    const CorpusRun run = decode_corpus_serial(target_, factory, corpus_, cfg, costs);
    return build_report(corpus_, run, baseline, Provenance{});
  }

  NgramModel target_;
  Corpus corpus_;
};

TEST_F(CorpusFixture, IdenticalReportsLandAtOne) {
  const RunReport r = report(vanilla(5, 30), noisy_oracle_factory(target_, 0.3, 1));
  const auto h = speedup_histogram(r, r, 0.5);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0], (HistogramBucket{1.0, 1.5, 20}));
}

TEST_F(CorpusFixture, PerfectDrafterSpeedupIsHalfK) {
  const CostModel costs{1.0, 1.0, 1.0};
  const RunReport r = report(vanilla(25, 100), self_rollout_factory(target_), costs);
  EXPECT_NEAR(r.modeled_speedup, 12.5, 1e-12);
  EXPECT_DOUBLE_EQ(r.mean_tok, 25.0);
  ASSERT_EQ(r.histogram.size(), 1u);
  EXPECT_EQ(r.histogram[0].count, 20);
  EXPECT_LE(r.histogram[0].lower, 12.5);
  EXPECT_GT(r.histogram[0].upper, 12.5);
  EXPECT_EQ(r.divergence_rate, 0.0);
}

TEST_F(CorpusFixture, ReportAggregates) {
  DecodeConfig cfg = vanilla(6, 40);
  cfg.strategy = Strategy::kSpecDecRelaxed;
  cfg.tau = 2.0;
  const RunReport r = report(cfg, noisy_oracle_factory(target_, 0.4, 2));
  ASSERT_EQ(r.sequences.size(), 20u);
  long emitted = 0;
  long iterations = 0;
  int counted = 0;
  for (const auto& s : r.sequences) {
    EXPECT_NEAR(s.tok, static_cast<double>(s.length) / static_cast<double>(s.iterations.size()),
                1e-12);
    for (const auto& it : s.iterations) emitted += it.emitted;
    iterations += static_cast<long>(s.iterations.size());
  }
  for (const auto& b : r.histogram) counted += b.count;
  EXPECT_EQ(counted, 20);
  EXPECT_NEAR(r.mean_tok, static_cast<double>(emitted) / static_cast<double>(iterations), 1e-12);
}

TEST_F(CorpusFixture, HistogramRejectsMismatchedCorpora) {
  const RunReport r = report(vanilla(5, 30), noisy_oracle_factory(target_, 0.3, 1));
  RunReport shorter = r;
  shorter.sequences.pop_back();
  try {
    speedup_histogram(r, shorter, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorpusMismatch);
  }
  RunReport other = r;
  other.sequences[3].source.push_back(kNumReserved);
  EXPECT_THROW(speedup_histogram(r, other, 0.5), Error);
}

TEST_F(CorpusFixture, ParallelRunnerMatchesSerial) {
  DecodeConfig cfg = vanilla(7, 60);
  cfg.strategy = Strategy::kSpecDecRelaxed;
  cfg.tau = 1.5;
  const auto factory = noisy_oracle_factory(target_, 0.3, 11);
  const CorpusRun serial = decode_corpus_serial(target_, factory, corpus_, cfg, {});
  for (int jobs : {1, 2, 4}) {
    const CorpusRun parallel = decode_corpus_parallel(target_, factory, corpus_, cfg, {}, jobs);
    EXPECT_EQ(parallel.results, serial.results) << "jobs=" << jobs;
  }
}

TEST_F(CorpusFixture, ArStrategiesNeedNoDrafter) {
  DecodeConfig cfg = vanilla(5, 20);
  cfg.strategy = Strategy::kArBeam;
  cfg.beam_width = 3;
  EXPECT_NO_THROW(decode_corpus_serial(target_, nullptr, corpus_, cfg, {}));
  cfg.strategy = Strategy::kSpecDecVanilla;
  EXPECT_THROW(decode_corpus_serial(target_, nullptr, corpus_, cfg, {}), Error);
}

TEST_F(CorpusFixture, VerificationGridShape) {
  const std::vector<int> betas{1, 2, 4};
  const std::vector<double> taus{0.0, 1.0, 3.0, 5.0};
  const auto rows = sweep_verification(target_, noisy_oracle_factory(target_, 0.3, 4), corpus_,
                                       betas, taus, vanilla(10, 40), {});
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[0].beta, 1);
  EXPECT_EQ(rows[0].tau, 0.0);
  EXPECT_EQ(rows[0].divergence_rate, 0.0);
  EXPECT_EQ(rows[5].beta, 2);
  EXPECT_EQ(rows[5].tau, 1.0);
}

TEST_F(CorpusFixture, BlockSizeSweepPerfectDrafter) {
  const std::vector<int> ks{5, 10};
  const auto rows = sweep_block_size(target_, self_rollout_factory(target_), corpus_, ks,
                                     vanilla(1, 50), {});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (BlockSizeRow{5, 5.0, 50.0 * 2.0 / (10.0 * 3.0)}));
  EXPECT_EQ(rows[1].mean_tok, 10.0);
}

TEST(Calibration, NoisyOracleMatchesClosedForm) {
  // Raw bifurcations from verification traces are independent draws, so
  // their mean is compared directly against the closed form.
  const NgramModel target = random_model(16, 2, 0.5, 7, false);
  const Corpus corpus = testing::random_corpus(16, 60, 7);
  for (int k : {5, 10}) {
    for (double p : {0.1, 0.3}) {
      const CorpusRun run = decode_corpus_serial(target, noisy_oracle_factory(target, p, 3), corpus,
                                                 vanilla(k, 100), {});
      std::vector<double> c;
      for (const auto& r : run.results) {
        for (const auto& t : r.trace) c.push_back(t.bifurcation);
      }
      const double n = static_cast<double>(c.size());
      const double mean = std::accumulate(c.begin(), c.end(), 0.0) / n;
      double ss = 0.0;
      for (double x : c) ss += (x - mean) * (x - mean);
      const double se = std::sqrt(ss / (n - 1.0) / n);
      EXPECT_LE(std::abs(mean - expected_accept_noisy_oracle(k, p)), 3.0 * se)
          << "k=" << k << " p=" << p;
    }
  }
}

TEST(Calibration, SaturatesBelowBound) {
  const double p = 0.3;
  const NgramModel target = random_model(16, 2, 0.5, 8, false);
  const Corpus corpus = testing::random_corpus(16, 30, 8);
  const std::vector<int> ks{5, 25, 50};
  const auto rows = sweep_block_size(target, noisy_oracle_factory(target, p, 5), corpus, ks,
                                     vanilla(1, 100), {});
  for (const auto& row : rows) EXPECT_LT(row.mean_tok, 1.0 / p + 1.0);
}

}  // namespace
}  // namespace specdec
