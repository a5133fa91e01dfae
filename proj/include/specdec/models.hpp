// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "specdec/core.hpp"

namespace specdec {

/// Log-probabilities never go below this value; zero-probability tokens are
/// stored as the floor so gap arithmetic stays finite.
inline constexpr double kLogProbFloor = -1e9;

/// Tolerance used when a distribution is checked for normalization on
/// construction or load.
inline constexpr double kNormalizationTolerance = 1e-6;

double log_sum_exp(std::span<const double> logprobs);

/// Index of the largest entry; ties go to the lowest index.
TokenId argmax(std::span<const double> logprobs);

/// Full log-probability vector over the vocabulary for one target position.
struct PositionScores {
  std::vector<double> logprobs;

  TokenId argmax() const { return specdec::argmax(logprobs); }
  double logprob(TokenId id) const { return logprobs.at(static_cast<std::size_t>(id)); }

  bool operator==(const PositionScores&) const = default;
};

/// Target-model interface. Implementations condition on the source and on
/// the already-decoded prefix and must be safe for concurrent const use.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual int vocab_size() const = 0;

  virtual PositionScores next_distribution(std::span<const TokenId> source,
                                           std::span<const TokenId> prefix) const = 0;
};

/// Exact-context n-gram table. The effective context of a query is the last
/// min(order - 1, |stream|) tokens of the stream source ++ <bos> ++ prefix.
/// Contexts without a table entry get the uniform distribution.
class NgramModel final : public LanguageModel {
 public:
  using Context = std::vector<TokenId>;
  using Table = std::map<Context, std::vector<double>>;

  /// Validates every entry; throws kBadContext, kTokenOutOfRange or
  /// kUnnormalizedDistribution naming the offending context.
  NgramModel(Vocabulary vocab, int order, Table table);

  const Vocabulary& vocab() const noexcept { return vocab_; }
  int order() const noexcept { return order_; }
  const Table& table() const noexcept { return table_; }

  int vocab_size() const override { return vocab_.size(); }

  PositionScores next_distribution(std::span<const TokenId> source,
                                   std::span<const TokenId> prefix) const override;

  Context effective_context(std::span<const TokenId> source,
                            std::span<const TokenId> prefix) const;

  bool operator==(const NgramModel& other) const {
    return order_ == other.order_ && vocab_ == other.vocab_ && table_ == other.table_;
  }

 private:
  Vocabulary vocab_;
  int order_;
  Table table_;
  std::vector<double> uniform_;
};

std::string format_context(std::span<const TokenId> ctx);

/// Reference implementation: k independent next_distribution calls, element
/// i conditioned on prefix ++ drafts[0..i).
std::vector<PositionScores> score_positions_serial(const LanguageModel& model,
                                                   std::span<const TokenId> source,
                                                   std::span<const TokenId> prefix,
                                                   std::span<const TokenId> drafts);

/// Same contract as score_positions_serial with positions evaluated by an
/// OpenMP team. Accounted as one verification event by callers.
std::vector<PositionScores> score_positions_parallel(const LanguageModel& model,
                                                     std::span<const TokenId> source,
                                                     std::span<const TokenId> prefix,
                                                     std::span<const TokenId> drafts);

/// Appends the argmax token up to `steps` times, stopping after EOS.
/// Returns only the generated tokens.
Sequence greedy_rollout(const LanguageModel& model, std::span<const TokenId> source,
                        std::span<const TokenId> prefix, int steps);

struct Example {
  Sequence source;
  Sequence target;

  bool operator==(const Example&) const = default;
};

using Corpus = std::vector<Example>;

/// Maximum-likelihood counts over effective contexts with add-`smoothing`
/// over the whole vocabulary. Every target must end with EOS.
NgramModel fit_ngram(const Vocabulary& vocab, const Corpus& corpus, int order, double smoothing);

/// Random model with a Dirichlet(concentration) distribution for every
/// context of length 1..order-1 (the empty context when order == 1). Lower
/// concentration gives peakier distributions. <bos> and <mask> get the floor
/// probability; <eos> does too when `emit_eos` is false, which yields models
/// whose greedy decode never terminates before max_len.
NgramModel random_model(int vocab_size, int order, double concentration, std::uint64_t seed,
                        bool emit_eos = true);

}  // namespace specdec
