// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "specdec/decode.hpp"
#include "specdec/drafters.hpp"
#include "test_util.hpp"

namespace specdec {
namespace {

using testing::kA;
using testing::kB;
using testing::kC;

PositionScores scores_abc(double a, double b, double c) {
  return PositionScores{{kLogProbFloor, kLogProbFloor, kLogProbFloor, a, b, c}};
}

// Target log-probability of `output` divided by its length, recomputed
// token by token.
double rescore(const LanguageModel& m, const Sequence& source, const Sequence& output) {
  double sum = 0.0;
  Sequence prefix;
  for (TokenId t : output) {
    sum += m.next_distribution(source, prefix).logprob(t);
    prefix.push_back(t);
  }
  return output.empty() ? 0.0 : sum / static_cast<double>(output.size());
}

std::vector<PositionScores> random_scores(RngStream& rng, int k, int v) {
  std::vector<PositionScores> out(static_cast<std::size_t>(k));
  for (auto& s : out) {
    s.logprobs.resize(static_cast<std::size_t>(v));
    // Coarse grid so ties and exact tau boundaries actually occur.
    for (auto& lp : s.logprobs) lp = -0.5 * static_cast<double>(rng.uniform_below(12));
  }
  return out;
}

TEST(FindBifurcation, Examples) {
  EXPECT_EQ(find_bifurcation(Sequence{3, 4, 5}, Sequence{3, 4, 5}), 3);
  EXPECT_EQ(find_bifurcation(Sequence{3, 4, 5}, Sequence{3, 9, 5}), 2);
  EXPECT_EQ(find_bifurcation(Sequence{3, 4, 5}, Sequence{7, 4, 5}), 1);
  EXPECT_EQ(find_bifurcation(Sequence{3}, Sequence{3}), 1);
}

TEST(FindBifurcation, LengthMismatch) {
  try {
    find_bifurcation(Sequence{3, 4}, Sequence{3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  EXPECT_THROW(find_bifurcation(Sequence{}, Sequence{}), Error);
}

TEST(VanillaVerify, AcceptsPrefixAndCorrects) {
  const DraftBlock drafts{{kA, kB, kB}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -3, -3), scores_abc(-3, -0.1, -3),
                                           scores_abc(-3, -3, -0.1)};
  const VerifyOutcome out = vanilla_verify(drafts, scores);
  EXPECT_EQ(out.bifurcation, 3);
  EXPECT_EQ(out.emitted, (Sequence{kA, kB, kC}));
  ASSERT_EQ(out.decisions.size(), 3u);
  EXPECT_TRUE(out.decisions[0].accepted);
  EXPECT_TRUE(out.decisions[1].accepted);
  EXPECT_FALSE(out.decisions[2].accepted);
  EXPECT_EQ(out.decisions[2].ar_top1, kC);
}

TEST(VanillaVerify, FullMatchHasNoBonusToken) {
  const DraftBlock drafts{{kA, kB}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -3, -3), scores_abc(-3, -0.1, -3)};
  const VerifyOutcome out = vanilla_verify(drafts, scores);
  EXPECT_EQ(out.bifurcation, 2);
  EXPECT_EQ(out.emitted, (Sequence{kA, kB}));
  EXPECT_TRUE(out.decisions[1].accepted);
}

TEST(VanillaVerify, FirstPositionWrong) {
  const DraftBlock drafts{{kB, kB}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -3, -3), scores_abc(-3, -0.1, -3)};
  const VerifyOutcome out = vanilla_verify(drafts, scores);
  EXPECT_EQ(out.bifurcation, 1);
  EXPECT_EQ(out.emitted, (Sequence{kA}));
}

TEST(SpecVerify, AcceptsWithinRankAndGap) {
  // a -0.1, b -0.4, c -2.0: b is rank 2 with gap 0.3.
  const DraftBlock drafts{{kB}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -0.4, -2.0)};
  const VerifyOutcome out = spec_verify(drafts, scores, 2, 1.0);
  EXPECT_EQ(out.emitted, (Sequence{kB}));
  EXPECT_TRUE(out.decisions[0].accepted);
  EXPECT_EQ(out.decisions[0].rank_of_draft, 2);
}

TEST(SpecVerify, RejectsLargeGap) {
  // c is rank 3 (within beta=3) but the gap 1.9 exceeds tau=1.
  const DraftBlock drafts{{kC}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -0.4, -2.0)};
  const VerifyOutcome out = spec_verify(drafts, scores, 3, 1.0);
  EXPECT_EQ(out.emitted, (Sequence{kA}));
  EXPECT_FALSE(out.decisions[0].accepted);
  EXPECT_EQ(out.decisions[0].rank_of_draft, 3);
}

TEST(SpecVerify, RejectsLowRank) {
  const DraftBlock drafts{{kB}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -0.4, -2.0)};
  EXPECT_EQ(spec_verify(drafts, scores, 1, 10.0).emitted, (Sequence{kA}));
}

TEST(SpecVerify, BoundariesAreInclusive) {
  const DraftBlock drafts{{kB}};
  const std::vector<PositionScores> scores{scores_abc(-0.5, -1.5, -2.0)};
  EXPECT_TRUE(spec_verify(drafts, scores, 2, 1.0).decisions[0].accepted);
  EXPECT_FALSE(spec_verify(drafts, scores, 2, 0.999).decisions[0].accepted);
}

TEST(SpecVerify, StopsAtFirstRejection) {
  const DraftBlock drafts{{kB, kC, kA}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -0.4, -2.0),
                                           scores_abc(-0.1, -0.4, -2.0),
                                           scores_abc(-0.1, -0.4, -2.0)};
  const VerifyOutcome out = spec_verify(drafts, scores, 3, 1.0);
  EXPECT_EQ(out.bifurcation, 2);
  EXPECT_EQ(out.emitted, (Sequence{kB, kA}));
  EXPECT_EQ(out.decisions.size(), 3u);
  EXPECT_FALSE(out.decisions[2].accepted);
}

TEST(SpecVerify, BadHyperparams) {
  const DraftBlock drafts{{kA}};
  const std::vector<PositionScores> scores{scores_abc(-0.1, -0.4, -2.0)};
  EXPECT_THROW(spec_verify(drafts, scores, 0, 1.0), Error);
  EXPECT_THROW(spec_verify(drafts, scores, 1, -1.0), Error);
}

TEST(SpecVerify, StrictestSettingReducesToVanilla) {
  // Scores without a tied maximum; with a tied top-1 the shared rank lets
  // the non-argmax tied draft through.
  RngStream rng(1, 2);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_below(8));
    auto scores = random_scores(rng, k, 7);
    for (auto& s : scores) {
      s.logprobs[static_cast<std::size_t>(rng.uniform_below(7))] = 0.25;
    }
    DraftBlock drafts;
    for (int i = 0; i < k; ++i) {
      // Bias towards the argmax so long accepted runs occur.
      drafts.tokens.push_back(rng.uniform01() < 0.7 ? scores[static_cast<std::size_t>(i)].argmax()
                                                    : static_cast<TokenId>(rng.uniform_below(7)));
    }
    const VerifyOutcome v = vanilla_verify(drafts, scores);
    const VerifyOutcome s = spec_verify(drafts, scores, 1, 0.0);
    EXPECT_EQ(v.emitted, s.emitted);
    EXPECT_EQ(v.bifurcation, s.bifurcation);
    EXPECT_EQ(v.decisions, s.decisions);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(SpecVerify, AcceptedCountMonotoneInThresholds) {
  RngStream rng(3, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_below(8));
    const auto scores = random_scores(rng, k, 8);
    DraftBlock drafts;
    for (int i = 0; i < k; ++i) drafts.tokens.push_back(static_cast<TokenId>(rng.uniform_below(8)));
    const int beta = 1 + static_cast<int>(rng.uniform_below(8));
    const double tau = 0.5 * static_cast<double>(rng.uniform_below(8));
    const int beta2 = beta + static_cast<int>(rng.uniform_below(8 - beta + 1));
    const double tau2 = tau + 0.5 * static_cast<double>(rng.uniform_below(4));
    auto accepted = [&](int b, double t) {
      const auto d = spec_verify(drafts, scores, b, t).decisions;
      return std::count_if(d.begin(), d.end(), [](const PositionDecision& x) { return x.accepted; });
    };
    EXPECT_LE(accepted(beta, tau), accepted(beta2, tau2));
  }
}

TEST(SpecVerify, RankSharedOnTies) {
  const DraftBlock drafts{{kB}};
  const std::vector<PositionScores> scores{scores_abc(-1.0, -1.0, -2.0)};
  EXPECT_EQ(spec_verify(drafts, scores, 1, 0.0).decisions[0].rank_of_draft, 1);
}

TEST(SpecDecode, PerfectDrafterIterationCount) {
  const NgramModel m = random_model(12, 2, 0.5, 6, false);
  for (auto [len, k] : {std::pair{50, 25}, std::pair{53, 10}, std::pair{7, 3}, std::pair{5, 1}}) {
    for (Strategy st : {Strategy::kSpecDecVanilla, Strategy::kSpecDecRelaxed}) {
      SelfRolloutDrafter d(m);
      DecodeConfig cfg;
      cfg.k = k;
      cfg.max_len = len;
      cfg.strategy = st;
      const DecodeResult r = specdec_decode(m, d, {}, cfg);
      EXPECT_EQ(r.iterations.size(), static_cast<std::size_t>((len + k - 1) / k));
      EXPECT_EQ(r.output, ar_greedy_decode(m, {}, len).output);
    }
  }
}

TEST(SpecDecode, FullyCorruptedDrafterEmitsOnePerIteration) {
  const NgramModel m = random_model(10, 3, 0.5, 2, false);
  NoisyOracleDrafter d(m, 1.0, RngStream(0, 0));
  DecodeConfig cfg;
  cfg.k = 6;
  cfg.max_len = 30;
  cfg.strategy = Strategy::kSpecDecVanilla;
  const DecodeResult r = specdec_decode(m, d, {}, cfg);
  ASSERT_EQ(r.iterations.size(), 30u);
  for (const auto& rec : r.iterations) {
    EXPECT_EQ(rec.emitted, 1);
    EXPECT_EQ(rec.drafted, 6);
  }
  EXPECT_EQ(r.output, ar_greedy_decode(m, {}, 30).output);
}

TEST(SpecDecode, VanillaIsLossless) {
  RngStream rng(8, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int v = 5 + static_cast<int>(rng.uniform_below(8));
    const int order = 1 + static_cast<int>(rng.uniform_below(3));
    const NgramModel target = random_model(v, order, 0.3 + rng.uniform01(), trial);
    DecodeConfig cfg;
    cfg.strategy = Strategy::kSpecDecVanilla;
    cfg.k = 1 + static_cast<int>(rng.uniform_below(10));
    cfg.beta = 1;
    cfg.max_len = 1 + static_cast<int>(rng.uniform_below(40));
    Sequence source(rng.uniform_below(4));
    for (auto& t : source) t = static_cast<TokenId>(kNumReserved + rng.uniform_below(v - 3));
    const NgramModel draft_model = random_model(v, 2, 0.5, trial + 5000);
    std::unique_ptr<Drafter> drafter;
    if (trial % 2 == 0) {
      drafter = std::make_unique<NoisyOracleDrafter>(target, rng.uniform01(), RngStream(trial, 0));
    } else {
      drafter = std::make_unique<SelfRolloutDrafter>(draft_model);
    }
    const DecodeResult spec = specdec_decode(target, *drafter, source, cfg);
    const DecodeResult ar = ar_greedy_decode(target, source, cfg.max_len);
    ASSERT_EQ(spec.output, ar.output) << "trial " << trial;
  }
}

TEST(SpecDecode, RelaxedMayDivergeButStaysValid) {
  int diverged = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const NgramModel target = random_model(10, 2, 1.0, seed);
    NoisyOracleDrafter d(target, 0.5, RngStream(seed, 0));
    DecodeConfig cfg;
    cfg.k = 5;
    cfg.beta = 5;
    cfg.tau = 5.0;
    cfg.max_len = 40;
    const DecodeResult r = specdec_decode(target, d, {}, cfg);
    EXPECT_NO_THROW(validate_sequence(r.output, 10));
    EXPECT_LE(r.output.size(), 40u);
    if (r.output != ar_greedy_decode(target, {}, 40).output) ++diverged;
  }
  EXPECT_GT(diverged, 0);
}

TEST(SpecDecode, RecordsAndTraceAreConsistent) {
  const NgramModel target = random_model(9, 3, 0.5, 1);
  NoisyOracleDrafter d(target, 0.3, RngStream(1, 0));
  DecodeConfig cfg;
  cfg.k = 4;
  cfg.max_len = 60;
  const CostModel costs{1.5, 2.5, 3.0};
  const DecodeResult r = specdec_decode(target, d, {}, cfg, costs);
  ASSERT_EQ(r.iterations.size(), r.trace.size());
  int total = 0;
  for (std::size_t i = 0; i < r.iterations.size(); ++i) {
    const auto& rec = r.iterations[i];
    EXPECT_EQ(rec.drafted, 4);
    EXPECT_EQ(rec.draft_cost, 1.5);
    EXPECT_EQ(rec.verify_cost, 2.5);
    EXPECT_GE(rec.emitted, 1);
    EXPECT_LE(rec.emitted, static_cast<int>(r.trace[i].emitted.size()));
    EXPECT_EQ(r.trace[i].decisions.size(), 4u);
    total += rec.emitted;
  }
  EXPECT_EQ(total, static_cast<int>(r.output.size()));
}

TEST(SpecDecode, StopsAtEos) {
  const NgramModel m = testing::chain_model();
  SelfRolloutDrafter d(m);
  DecodeConfig cfg;
  cfg.k = 5;
  const DecodeResult r = specdec_decode(m, d, {}, cfg);
  EXPECT_EQ(r.output, (Sequence{kA, kB, kEos}));
  EXPECT_EQ(r.iterations.size(), 1u);
  EXPECT_EQ(r.iterations[0].emitted, 3);
}

TEST(SpecDecode, RejectsInvalidConfig) {
  const NgramModel m = testing::chain_model();
  SelfRolloutDrafter d(m);
  DecodeConfig cfg;
  cfg.beta = 7;
  try {
    specdec_decode(m, d, {}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBetaExceedsVocab);
  }
  cfg = DecodeConfig{};
  cfg.strategy = Strategy::kArGreedy;
  EXPECT_THROW(specdec_decode(m, d, {}, cfg), Error);
}

TEST(SpecDecode, DeterministicForFixedSeed) {
  const NgramModel target = random_model(11, 3, 0.6, 4);
  DecodeConfig cfg;
  cfg.k = 7;
  cfg.max_len = 80;
  auto run = [&] {
    NoisyOracleDrafter d(target, 0.4, RngStream(99, 3));
    return specdec_decode(target, d, {}, cfg);
  };
  EXPECT_EQ(run(), run());
}

TEST(SpecDecode, ScoreMatchesRescoring) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NgramModel target = random_model(10, 2, 0.8, seed);
    NoisyOracleDrafter d(target, 0.5, RngStream(seed, 1));
    DecodeConfig cfg;
    cfg.k = 5;
    cfg.tau = 3.0;
    cfg.max_len = 30;
    const DecodeResult r = specdec_decode(target, d, {}, cfg);
    EXPECT_NEAR(r.score, rescore(target, {}, r.output), 1e-9);
  }
}

TEST(ArGreedy, ChainAndRecords) {
  const CostModel costs{1.0, 2.0, 4.0};
  const DecodeResult r = ar_greedy_decode(testing::chain_model(), {}, 10, costs);
  EXPECT_EQ(r.output, (Sequence{kA, kB, kEos}));
  ASSERT_EQ(r.iterations.size(), 3u);
  for (const auto& rec : r.iterations) {
    EXPECT_EQ(rec.emitted, 1);
    EXPECT_EQ(rec.verify_cost, 4.0);
    EXPECT_EQ(rec.draft_cost, 0.0);
  }
  EXPECT_EQ(ar_greedy_decode(testing::cycle_model(), {}, 5).output.size(), 5u);
}

TEST(ArBeam, WidthOneIsGreedy) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const NgramModel m = random_model(9, 1 + static_cast<int>(seed % 3), 0.5, seed);
    const Sequence src{static_cast<TokenId>(3 + seed % 6)};
    EXPECT_EQ(ar_beam_decode(m, src, 1, 25).output, ar_greedy_decode(m, src, 25).output);
  }
}

// Vocabulary <bos> <eos> <mask> a b. Greedy commits to a at every step while
// the best normalized hypothesis is [b, <eos>].
NgramModel beam_trap_model() {
  Vocabulary vocab = Vocabulary::with_content({"a", "b"});
  const double f = kLogProbFloor;
  NgramModel::Table table;
  table[{kBos}] = {f, f, f, std::log(0.55), std::log(0.45)};
  table[{kA}] = {f, std::log(0.33), f, std::log(0.34), std::log(0.33)};
  table[{kB}] = {f, std::log(0.95), f, std::log(0.05), f};
  return NgramModel(std::move(vocab), 2, std::move(table));
}

TEST(ArBeam, FindsBetterHypothesisThanGreedy) {
  const NgramModel m = beam_trap_model();
  const int max_len = 3;
  // Exhaustive oracle over all EOS-terminated sequences of length <= 3.
  Sequence best;
  double best_score = -INFINITY;
  std::function<void(Sequence)> walk = [&](Sequence s) {
    if (!s.empty() && s.back() == kEos) {
      const double score = rescore(m, {}, s);
      if (score > best_score) {
        best_score = score;
        best = s;
      }
      return;
    }
    if (static_cast<int>(s.size()) == max_len) return;
    for (TokenId t : {kEos, kA, kB}) {
      Sequence next = s;
      next.push_back(t);
      walk(next);
    }
  };
  walk({});
  EXPECT_EQ(best, (Sequence{kB, kEos}));

  const DecodeResult greedy = ar_greedy_decode(m, {}, max_len);
  const DecodeResult beam = ar_beam_decode(m, {}, 2, max_len);
  EXPECT_EQ(greedy.output, (Sequence{kA, kA, kA}));
  EXPECT_EQ(beam.output, best);
  EXPECT_NEAR(beam.score, best_score, 1e-12);
  EXPECT_GT(beam.score, greedy.score);
  EXPECT_EQ(beam.iterations.size(), 2u);
}

TEST(ArBeam, ScoreMatchesRescoring) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NgramModel m = random_model(8, 2, 0.7, seed);
    const DecodeResult r = ar_beam_decode(m, {}, 4, 15);
    EXPECT_NEAR(r.score, rescore(m, {}, r.output), 1e-9);
    const DecodeResult g = ar_greedy_decode(m, {}, 15);
    EXPECT_NEAR(g.score, rescore(m, {}, g.output), 1e-9);
  }
}

TEST(ArBeam, RejectsBadWidth) {
  EXPECT_THROW(ar_beam_decode(testing::chain_model(), {}, 0, 5), Error);
  EXPECT_THROW(ar_greedy_decode(testing::chain_model(), {}, 0), Error);
}

}  // namespace
}  // namespace specdec
