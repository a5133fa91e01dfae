// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "specdec/drafters.hpp"

#include <fmt/core.h>

namespace specdec {

namespace {

void check_k(int k) {
  if (k < 1) throw Error(ErrorCode::kNonpositiveK, fmt::format("k: must be >= 1, got {}", k));
}

DraftBlock padded_rollout(const LanguageModel& model, std::span<const TokenId> source,
                          std::span<const TokenId> prefix, int k) {
  DraftBlock block{greedy_rollout(model, source, prefix, k)};
  block.tokens.resize(static_cast<std::size_t>(k), kEos);
  return block;
}

}  // namespace

DraftBlock draft_block_selfrollout(const LanguageModel& drafter, std::span<const TokenId> source,
                                   std::span<const TokenId> prefix, int k) {
  check_k(k);
  return padded_rollout(drafter, source, prefix, k);
}

NoisyOracleDrafter::NoisyOracleDrafter(const LanguageModel& target, double p, RngStream rng)
    : target_(&target), p_(p), rng_(std::move(rng)) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("noisy-oracle: corruption probability must be in [0,1], got {}", p));
  }
}

DraftBlock NoisyOracleDrafter::draft(std::span<const TokenId> source,
                                     std::span<const TokenId> prefix, int k) {
  check_k(k);
  DraftBlock block = padded_rollout(*target_, source, prefix, k);
  const int v = target_->vocab_size();
  last_corrupted_.assign(static_cast<std::size_t>(k), false);
  for (int i = 0; i < k; ++i) {
    RngStream rng = rng_.substream(prefix.size() + static_cast<std::size_t>(i));
    const bool fire = rng.uniform01() < p_;
    if (!fire) continue;
    TokenId& tok = block.tokens[static_cast<std::size_t>(i)];
    const TokenId greedy = tok;
    const std::uint64_t admissible = static_cast<std::uint64_t>(v) - (greedy == kMask ? 1 : 2);
    auto pick = static_cast<TokenId>(rng.uniform_below(admissible));
    // Map the draw onto ids in increasing order, skipping the excluded ones.
    for (TokenId id = 0; id < v; ++id) {
      if (id == greedy || id == kMask) continue;
      if (pick == 0) {
        tok = id;
        break;
      }
      --pick;
    }
    last_corrupted_[static_cast<std::size_t>(i)] = true;
  }
  return block;
}

DraftBlock draft_block_noisy_oracle(NoisyOracleDrafter& drafter, std::span<const TokenId> source,
                                    std::span<const TokenId> prefix, int k) {
  return drafter.draft(source, prefix, k);
}

}  // namespace specdec
