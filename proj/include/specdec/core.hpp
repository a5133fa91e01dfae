// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace specdec {

enum class ErrorCode {
  // configuration / validation
  kBetaExceedsVocab,
  kNonpositiveK,
  kNegativeTau,
  kZeroMaxLen,
  kBadHyperparams,
  kBadArgument,
  kEmptyCorpus,
  kBadTargetTermination,
  kEmptyRecords,
  kNonpositiveTok,
  kCorpusMismatch,
  kLengthMismatch,
  // model / data
  kTokenOutOfRange,
  kBadSequence,
  kBadVocabulary,
  kMalformedJson,
  kBadFormatTag,
  kUnnormalizedDistribution,
  kBadReservedTokens,
  kBadContext,
  kUnknownSymbol,
  kEmptyTarget,
  kMalformedLine,
  kIoFailure,
};

std::string_view error_code_name(ErrorCode code);

// Errors that stem from user-supplied parameters rather than from files or
// models. The CLI maps these to exit code 2.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  /// The message without the leading error-code name.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

using TokenId = std::int32_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kMask = 2;
inline constexpr TokenId kNumReserved = 3;

inline constexpr std::string_view kBosSymbol = "<bos>";
inline constexpr std::string_view kEosSymbol = "<eos>";
inline constexpr std::string_view kMaskSymbol = "<mask>";

/// Ordered list of distinct symbols. Indices 0..2 are always <bos>, <eos>,
/// <mask>; at least one content symbol follows.
class Vocabulary {
 public:
  /// Builds from the full symbol list, reserved symbols included.
  explicit Vocabulary(std::vector<std::string> symbols);

  /// Reserved symbols followed by `content` in order.
  static Vocabulary with_content(const std::vector<std::string>& content);

  /// Reserved symbols followed by "t3", "t4", ... up to `size` entries.
  static Vocabulary synthetic(int size);

  int size() const noexcept { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  const std::string& symbol(TokenId id) const;

  /// Returns -1 when the symbol is unknown.
  TokenId find(std::string_view symbol) const;

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
};

using Sequence = std::vector<TokenId>;

/// Throws kTokenOutOfRange for ids outside [0, vocab_size) and kBadSequence
/// when an EOS appears anywhere but the final position.
void validate_sequence(const Sequence& seq, int vocab_size);

enum class Strategy { kArGreedy, kArBeam, kSpecDecVanilla, kSpecDecRelaxed };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct DecodeConfig {
  int k = 25;
  int beta = 3;
  double tau = 1.0;
  int max_len = 200;
  Strategy strategy = Strategy::kSpecDecRelaxed;
  int beam_width = 5;
  std::uint64_t seed = 0;

  bool operator==(const DecodeConfig&) const = default;
};

/// Returns `cfg` unchanged when every invariant holds; otherwise throws an
/// Error naming the offending field.
DecodeConfig validate_config(const DecodeConfig& cfg, int vocab_size);

/// Simulated per-event costs: one drafting call, one parallel verification
/// call, one autoregressive step.
struct CostModel {
  double t_d = 1.0;
  double t_v = 2.0;
  double t_ar = 2.0;

  bool operator==(const CostModel&) const = default;
};

void validate_costs(const CostModel& costs);

struct IterationRecord {
  int drafted = 0;
  int emitted = 0;
  int bifurcation = 0;
  double draft_cost = 0.0;
  double verify_cost = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

/// Deterministic 64-bit stream keyed by (seed, stream_id). Distinct stream ids
/// give per-sequence streams so parallel runs do not depend on scheduling.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Independent child stream keyed by (seed, stream_id, index). Does not
  /// touch this stream's state.
  RngStream substream(std::uint64_t index) const;

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1) from the top 53 bits of one draw.
  double uniform01();

  /// Uniform integer in [0, n). Consumes one or more draws.
  std::uint64_t uniform_below(std::uint64_t n);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;

  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::seed_seq& seq);
};

inline RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

}  // namespace specdec
