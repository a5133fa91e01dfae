// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "specdec/core.hpp"
#include "specdec/drafters.hpp"
#include "specdec/models.hpp"

namespace specdec {

struct PositionDecision {
  TokenId draft = 0;
  TokenId ar_top1 = 0;
  bool accepted = false;
  double draft_logprob = 0.0;
  double top1_logprob = 0.0;
  // 1 + number of candidates with a strictly larger logprob, so tied
  // candidates share the better rank.
  int rank_of_draft = 0;

  bool operator==(const PositionDecision&) const = default;
};

struct VerifyOutcome {
  std::vector<TokenId> emitted;
  int bifurcation = 0;  // 1-based
  std::vector<PositionDecision> decisions;

  bool operator==(const VerifyOutcome&) const = default;
};

struct DecodeResult {
  Sequence output;
  std::vector<IterationRecord> iterations;
  std::vector<VerifyOutcome> trace;
  // Target-model log-probability of `output` divided by its length.
  double score = 0.0;

  bool operator==(const DecodeResult&) const = default;
};

/// Smallest 1-based i with drafts[i] != ar_argmax[i]; k when all match.
int find_bifurcation(std::span<const TokenId> drafts, std::span<const TokenId> ar_argmax);

/// Accepts drafts strictly before the bifurcation and emits the target's
/// top-1 token there. Always emits at least one token.
VerifyOutcome vanilla_verify(const DraftBlock& drafts, std::span<const PositionScores> scores);

/// Relaxed verification: position i is accepted when every earlier position
/// was, the draft ranks within the top `beta` candidates, and its logprob is
/// within `tau` of the top-1 logprob (both comparisons non-strict). The first
/// rejected position emits the target's top-1 token.
VerifyOutcome spec_verify(const DraftBlock& drafts, std::span<const PositionScores> scores,
                          int beta, double tau);

/// Token-by-token argmax until EOS or max_len. One record per token with
/// verify_cost = t_ar.
DecodeResult ar_greedy_decode(const LanguageModel& target, std::span<const TokenId> source,
                              int max_len, const CostModel& costs = {});

/// Length-normalized beam search (sum of logprobs over length). Returns the
/// best finished hypothesis, or the best unfinished one at max_len. Ties go
/// to the lexicographically smallest token path.
DecodeResult ar_beam_decode(const LanguageModel& target, std::span<const TokenId> source,
                            int beam_width, int max_len, const CostModel& costs = {});

/// Draft-then-verify loop for SPECDEC_VANILLA and SPECDEC_RELAXED. Each
/// iteration is one drafting event and one parallel verification event.
/// Emitted tokens are cut after the first EOS and at max_len.
DecodeResult specdec_decode(const LanguageModel& target, Drafter& drafter,
                            std::span<const TokenId> source, const DecodeConfig& cfg,
                            const CostModel& costs = {});

}  // namespace specdec
