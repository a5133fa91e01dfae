// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "specdec/core.hpp"
#include "specdec/models.hpp"

namespace specdec {

/// The k tokens proposed by one drafting call.
struct DraftBlock {
  std::vector<TokenId> tokens;

  int size() const noexcept { return static_cast<int>(tokens.size()); }
  bool operator==(const DraftBlock&) const = default;
};

/// One call to draft() is one drafting event of cost t_d, whatever the
/// implementation does internally. The returned block always has exactly k
/// tokens; positions after an EOS are padded with EOS.
class Drafter {
 public:
  virtual ~Drafter() = default;

  virtual DraftBlock draft(std::span<const TokenId> source, std::span<const TokenId> prefix,
                           int k) = 0;
};

/// Greedy rollout of the drafter model, padded with EOS to length k.
DraftBlock draft_block_selfrollout(const LanguageModel& drafter, std::span<const TokenId> source,
                                   std::span<const TokenId> prefix, int k);

class SelfRolloutDrafter final : public Drafter {
 public:
  explicit SelfRolloutDrafter(const LanguageModel& model) : model_(&model) {}
  explicit SelfRolloutDrafter(const LanguageModel&&) = delete;

  DraftBlock draft(std::span<const TokenId> source, std::span<const TokenId> prefix,
                   int k) override {
    return draft_block_selfrollout(*model_, source, prefix, k);
  }

 private:
  const LanguageModel* model_;
};

/// Copies the target's greedy continuation and corrupts each position
/// independently with probability p. A corrupted position receives a token
/// drawn uniformly from the vocabulary minus {greedy token, <mask>}, so it
/// never equals the greedy token.
///
/// Randomness is keyed by absolute output position: position j (counted
/// from the start of the output) reads rng.substream(j), taking one
/// uniform01() draw that fires when u < p and, if it fires, one
/// uniform_below(n) draw over the n admissible replacements in increasing id
/// order. Runs that differ only in verification settings therefore see the
/// same corruption pattern.
class NoisyOracleDrafter final : public Drafter {
 public:
  NoisyOracleDrafter(const LanguageModel& target, double p, RngStream rng);
  NoisyOracleDrafter(const LanguageModel&&, double, RngStream) = delete;

  DraftBlock draft(std::span<const TokenId> source, std::span<const TokenId> prefix,
                   int k) override;

  double corruption_probability() const noexcept { return p_; }

  /// Per-position corruption flags of the most recent block.
  const std::vector<bool>& last_corrupted() const noexcept { return last_corrupted_; }

 private:
  const LanguageModel* target_;
  double p_;
  RngStream rng_;
  std::vector<bool> last_corrupted_;
};

DraftBlock draft_block_noisy_oracle(NoisyOracleDrafter& drafter, std::span<const TokenId> source,
                                    std::span<const TokenId> prefix, int k);

}  // namespace specdec
