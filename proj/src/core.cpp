// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "specdec/core.hpp"

#include <fmt/core.h>

#include <array>

namespace specdec {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBetaExceedsVocab: return "BETA_EXCEEDS_VOCAB";
    case ErrorCode::kNonpositiveK: return "NONPOSITIVE_K";
    case ErrorCode::kNegativeTau: return "NEGATIVE_TAU";
    case ErrorCode::kZeroMaxLen: return "ZERO_MAX_LEN";
    case ErrorCode::kBadHyperparams: return "BAD_HYPERPARAMS";
    case ErrorCode::kBadArgument: return "BAD_ARGUMENT";
    case ErrorCode::kEmptyCorpus: return "EMPTY_CORPUS";
    case ErrorCode::kBadTargetTermination: return "BAD_TARGET_TERMINATION";
    case ErrorCode::kEmptyRecords: return "EMPTY_RECORDS";
    case ErrorCode::kNonpositiveTok: return "NONPOSITIVE_TOK";
    case ErrorCode::kCorpusMismatch: return "CORPUS_MISMATCH";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kTokenOutOfRange: return "TOKEN_OUT_OF_RANGE";
    case ErrorCode::kBadSequence: return "BAD_SEQUENCE";
    case ErrorCode::kBadVocabulary: return "BAD_VOCABULARY";
    case ErrorCode::kMalformedJson: return "MALFORMED_JSON";
    case ErrorCode::kBadFormatTag: return "BAD_FORMAT_TAG";
    case ErrorCode::kUnnormalizedDistribution: return "UNNORMALIZED_DISTRIBUTION";
    case ErrorCode::kBadReservedTokens: return "BAD_RESERVED_TOKENS";
    case ErrorCode::kBadContext: return "BAD_CONTEXT";
    case ErrorCode::kUnknownSymbol: return "UNKNOWN_SYMBOL";
    case ErrorCode::kEmptyTarget: return "EMPTY_TARGET";
    case ErrorCode::kMalformedLine: return "MALFORMED_LINE";
    case ErrorCode::kIoFailure: return "IO_FAILURE";
  }
  return "UNKNOWN";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBetaExceedsVocab:
    case ErrorCode::kNonpositiveK:
    case ErrorCode::kNegativeTau:
    case ErrorCode::kZeroMaxLen:
    case ErrorCode::kBadHyperparams:
    case ErrorCode::kBadArgument:
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kBadTargetTermination:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", error_code_name(code), message)),
      code_(code),
      detail_(message) {}

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 4) {
    throw Error(ErrorCode::kBadVocabulary,
                fmt::format("vocab: size {} < 4 (reserved symbols plus one content symbol)",
                            symbols_.size()));
  }
  if (symbols_[kBos] != kBosSymbol || symbols_[kEos] != kEosSymbol ||
      symbols_[kMask] != kMaskSymbol) {
    throw Error(ErrorCode::kBadReservedTokens,
                fmt::format("vocab[0..2] must be [\"{}\",\"{}\",\"{}\"]", kBosSymbol, kEosSymbol,
                            kMaskSymbol));
  }
  index_.reserve(symbols_.size());
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    auto [it, inserted] = index_.emplace(symbols_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorCode::kBadVocabulary,
                  fmt::format("vocab[{}]: duplicate symbol \"{}\"", i, symbols_[i]));
    }
  }
}

Vocabulary Vocabulary::with_content(const std::vector<std::string>& content) {
  std::vector<std::string> symbols{std::string(kBosSymbol), std::string(kEosSymbol),
                                   std::string(kMaskSymbol)};
  symbols.insert(symbols.end(), content.begin(), content.end());
  return Vocabulary(std::move(symbols));
}

Vocabulary Vocabulary::synthetic(int size) {
  std::vector<std::string> content;
  for (int i = kNumReserved; i < size; ++i) content.push_back(fmt::format("t{}", i));
  return with_content(content);
}

const std::string& Vocabulary::symbol(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCode::kTokenOutOfRange,
                fmt::format("token id {} outside vocabulary of size {}", id, size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? -1 : it->second;
}

void validate_sequence(const Sequence& seq, int vocab_size) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] < 0 || seq[i] >= vocab_size) {
      throw Error(ErrorCode::kTokenOutOfRange,
                  fmt::format("position {}: token id {} outside vocabulary of size {}", i, seq[i],
                              vocab_size));
    }
    if (seq[i] == kEos && i + 1 != seq.size()) {
      throw Error(ErrorCode::kBadSequence, fmt::format("position {}: EOS before end", i));
    }
  }
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kArGreedy: return "ar-greedy";
    case Strategy::kArBeam: return "ar-beam";
    case Strategy::kSpecDecVanilla: return "specdec-vanilla";
    case Strategy::kSpecDecRelaxed: return "specdec-relaxed";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kArGreedy, Strategy::kArBeam, Strategy::kSpecDecVanilla,
                     Strategy::kSpecDecRelaxed}) {
    if (strategy_name(s) == name) return s;
  }
  throw Error(ErrorCode::kBadArgument, fmt::format("strategy: unknown name \"{}\"", name));
}

DecodeConfig validate_config(const DecodeConfig& cfg, int vocab_size) {
  if (cfg.k < 1) {
    throw Error(ErrorCode::kNonpositiveK, fmt::format("k: must be >= 1, got {}", cfg.k));
  }
  if (cfg.beta < 1) {
    throw Error(ErrorCode::kBadHyperparams, fmt::format("beta: must be >= 1, got {}", cfg.beta));
  }
  if (cfg.beta > vocab_size) {
    throw Error(ErrorCode::kBetaExceedsVocab,
                fmt::format("beta: {} exceeds vocabulary size {}", cfg.beta, vocab_size));
  }
  if (!(cfg.tau >= 0.0)) {
    throw Error(ErrorCode::kNegativeTau, fmt::format("tau: must be >= 0, got {}", cfg.tau));
  }
  if (cfg.max_len < 1) {
    throw Error(ErrorCode::kZeroMaxLen, fmt::format("max_len: must be >= 1, got {}", cfg.max_len));
  }
  if (cfg.beam_width < 1) {
    throw Error(ErrorCode::kBadHyperparams,
                fmt::format("beam_width: must be >= 1, got {}", cfg.beam_width));
  }
  return cfg;
}

void validate_costs(const CostModel& costs) {
  if (!(costs.t_d >= 0.0) || !(costs.t_v >= 0.0) || !(costs.t_ar >= 0.0)) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("costs: all entries must be non-negative, got {},{},{}", costs.t_d,
                            costs.t_v, costs.t_ar));
  }
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  engine_.seed(seq);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id, std::seed_seq& seq)
    : seed_(seed), stream_id_(stream_id), engine_(seq) {}

RngStream RngStream::substream(std::uint64_t index) const {
  // Six key words never collide with the four-word top-level streams.
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(stream_id_),
                    static_cast<std::uint32_t>(stream_id_ >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return RngStream(seed_, stream_id_, seq);
}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kBadArgument, "uniform_below: n must be positive");
  // Reject the low partial bucket so every residue is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

}  // namespace specdec
