// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "specdec/decode.hpp"

#include <fmt/core.h>

#include <algorithm>

namespace specdec {

namespace {

void check_lengths(std::size_t drafts, std::size_t other, const char* what) {
  if (drafts == 0 || drafts != other) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{}: draft block has {} tokens but {} entries were supplied", what,
                            drafts, other));
  }
}

// Per-position ranking data, independent of the acceptance rule.
std::vector<PositionDecision> rank_positions(const DraftBlock& drafts,
                                             std::span<const PositionScores> scores) {
  const int v = scores.empty() ? 0 : static_cast<int>(scores.front().logprobs.size());
  std::vector<PositionDecision> decisions(drafts.tokens.size());
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& lp = scores[i].logprobs;
    const TokenId draft = drafts.tokens[i];
    if (draft < 0 || draft >= static_cast<int>(lp.size())) {
      throw Error(ErrorCode::kTokenOutOfRange,
                  fmt::format("drafts[{}]: token id {} outside vocabulary of size {}", i, draft,
                              v));
    }
    auto& d = decisions[i];
    d.draft = draft;
    d.ar_top1 = argmax(lp);
    d.draft_logprob = lp[static_cast<std::size_t>(draft)];
    d.top1_logprob = lp[static_cast<std::size_t>(d.ar_top1)];
    d.rank_of_draft =
        1 + static_cast<int>(std::count_if(lp.begin(), lp.end(),
                                           [&](double x) { return x > d.draft_logprob; }));
  }
  return decisions;
}

VerifyOutcome finish(std::vector<PositionDecision> decisions, int bifurcation, bool all_accepted) {
  VerifyOutcome out;
  out.bifurcation = bifurcation;
  const auto c = static_cast<std::size_t>(bifurcation);
  for (std::size_t i = 0; i + 1 < c; ++i) out.emitted.push_back(decisions[i].draft);
  out.emitted.push_back(all_accepted ? decisions[c - 1].draft : decisions[c - 1].ar_top1);
  out.decisions = std::move(decisions);
  return out;
}

double normalized(double sum, std::size_t len) {
  return len == 0 ? 0.0 : sum / static_cast<double>(len);
}

}  // namespace

int find_bifurcation(std::span<const TokenId> drafts, std::span<const TokenId> ar_argmax) {
  check_lengths(drafts.size(), ar_argmax.size(), "find_bifurcation");
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    if (drafts[i] != ar_argmax[i]) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(drafts.size());
}

VerifyOutcome vanilla_verify(const DraftBlock& drafts, std::span<const PositionScores> scores) {
  check_lengths(drafts.tokens.size(), scores.size(), "vanilla_verify");
  auto decisions = rank_positions(drafts, scores);
  std::vector<TokenId> top1(decisions.size());
  std::transform(decisions.begin(), decisions.end(), top1.begin(),
                 [](const PositionDecision& d) { return d.ar_top1; });
  const int c = find_bifurcation(drafts.tokens, top1);
  const bool all_match = drafts.tokens[static_cast<std::size_t>(c - 1)] == top1[static_cast<std::size_t>(c - 1)];
  for (int i = 0; i < c - 1; ++i) decisions[static_cast<std::size_t>(i)].accepted = true;
  if (all_match) decisions[static_cast<std::size_t>(c - 1)].accepted = true;
  return finish(std::move(decisions), c, all_match);
}

VerifyOutcome spec_verify(const DraftBlock& drafts, std::span<const PositionScores> scores,
                          int beta, double tau) {
  check_lengths(drafts.tokens.size(), scores.size(), "spec_verify");
  if (beta < 1 || !(tau >= 0.0)) {
    throw Error(ErrorCode::kBadHyperparams,
                fmt::format("spec_verify: need beta >= 1 and tau >= 0, got beta={} tau={}", beta,
                            tau));
  }
  auto decisions = rank_positions(drafts, scores);
  const int k = static_cast<int>(decisions.size());
  int c = k;
  bool all_accepted = true;
  for (int i = 0; i < k; ++i) {
    auto& d = decisions[static_cast<std::size_t>(i)];
    d.accepted = d.rank_of_draft <= beta && d.top1_logprob - d.draft_logprob <= tau;
    if (!d.accepted) {
      c = i + 1;
      all_accepted = false;
      break;
    }
  }
  return finish(std::move(decisions), c, all_accepted);
}

DecodeResult ar_greedy_decode(const LanguageModel& target, std::span<const TokenId> source,
                              int max_len, const CostModel& costs) {
  if (max_len < 1) {
    throw Error(ErrorCode::kZeroMaxLen, fmt::format("max_len: must be >= 1, got {}", max_len));
  }
  DecodeResult result;
  double sum = 0.0;
  while (static_cast<int>(result.output.size()) < max_len &&
         (result.output.empty() || result.output.back() != kEos)) {
    const PositionScores scores = target.next_distribution(source, result.output);
    const TokenId next = scores.argmax();
    sum += scores.logprob(next);
    result.output.push_back(next);
    result.iterations.push_back(IterationRecord{1, 1, 1, 0.0, costs.t_ar});
  }
  result.score = normalized(sum, result.output.size());
  return result;
}

DecodeResult ar_beam_decode(const LanguageModel& target, std::span<const TokenId> source,
                            int beam_width, int max_len, const CostModel& costs) {
  if (beam_width < 1) {
    throw Error(ErrorCode::kBadHyperparams,
                fmt::format("beam_width: must be >= 1, got {}", beam_width));
  }
  if (max_len < 1) {
    throw Error(ErrorCode::kZeroMaxLen, fmt::format("max_len: must be >= 1, got {}", max_len));
  }
  struct Hypothesis {
    Sequence tokens;
    double sum = 0.0;
  };
  // Higher normalized score first, then the smaller token path.
  auto better = [](const Hypothesis& a, const Hypothesis& b) {
    const double na = normalized(a.sum, a.tokens.size());
    const double nb = normalized(b.sum, b.tokens.size());
    if (na != nb) return na > nb;
    return a.tokens < b.tokens;
  };

  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  const auto width = static_cast<std::size_t>(beam_width);
  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    candidates.reserve(live.size() * static_cast<std::size_t>(target.vocab_size()));
    for (const auto& h : live) {
      const PositionScores scores = target.next_distribution(source, h.tokens);
      for (std::size_t w = 0; w < scores.logprobs.size(); ++w) {
        Hypothesis next{h.tokens, h.sum + scores.logprobs[w]};
        next.tokens.push_back(static_cast<TokenId>(w));
        candidates.push_back(std::move(next));
      }
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);
    live.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      if (candidates[i].tokens.back() == kEos) {
        finished.push_back(std::move(candidates[i]));
      } else {
        live.push_back(std::move(candidates[i]));
      }
    }
  }
  const auto& pool = finished.empty() ? live : finished;
  const Hypothesis best = *std::min_element(pool.begin(), pool.end(), better);

  DecodeResult result;
  result.output = best.tokens;
  result.score = normalized(best.sum, best.tokens.size());
  result.iterations.assign(best.tokens.size(), IterationRecord{1, 1, 1, 0.0, costs.t_ar});
  return result;
}

DecodeResult specdec_decode(const LanguageModel& target, Drafter& drafter,
                            std::span<const TokenId> source, const DecodeConfig& cfg,
                            const CostModel& costs) {
  validate_config(cfg, target.vocab_size());
  const bool vanilla = cfg.strategy == Strategy::kSpecDecVanilla;
  if (!vanilla && cfg.strategy != Strategy::kSpecDecRelaxed) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("strategy: specdec_decode cannot run \"{}\"",
                            strategy_name(cfg.strategy)));
  }
  DecodeResult result;
  double sum = 0.0;
  while (static_cast<int>(result.output.size()) < cfg.max_len &&
         (result.output.empty() || result.output.back() != kEos)) {
    const DraftBlock block = drafter.draft(source, result.output, cfg.k);
    if (block.size() != cfg.k) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("drafter returned {} tokens, expected k={}", block.size(), cfg.k));
    }
    const auto scores = score_positions_parallel(target, source, result.output, block.tokens);
    VerifyOutcome outcome = vanilla ? vanilla_verify(block, scores)
                                    : spec_verify(block, scores, cfg.beta, cfg.tau);

    const int room = cfg.max_len - static_cast<int>(result.output.size());
    int appended = 0;
    for (TokenId tok : outcome.emitted) {
      if (appended == room) break;
      const auto& d = outcome.decisions[static_cast<std::size_t>(appended)];
      sum += d.accepted ? d.draft_logprob : d.top1_logprob;
      result.output.push_back(tok);
      ++appended;
      if (tok == kEos) break;
    }
    result.iterations.push_back(IterationRecord{cfg.k, appended, appended, costs.t_d, costs.t_v});
    result.trace.push_back(std::move(outcome));
  }
  result.score = normalized(sum, result.output.size());
  return result;
}

}  // namespace specdec
