// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <exception>

#include "specdec/models.hpp"

namespace specdec {

namespace {

Sequence extend(std::span<const TokenId> prefix, std::span<const TokenId> drafts) {
  Sequence stream;
  stream.reserve(prefix.size() + drafts.size());
  stream.insert(stream.end(), prefix.begin(), prefix.end());
  stream.insert(stream.end(), drafts.begin(), drafts.end());
  return stream;
}

void check_block(std::span<const TokenId> drafts) {
  if (drafts.empty()) throw Error(ErrorCode::kLengthMismatch, "drafts: block must be non-empty");
}

// Below this many scored entries (positions x vocabulary) a team costs more
// than it saves.
constexpr long kParallelWorkThreshold = 1L << 14;

}  // namespace

std::vector<PositionScores> score_positions_serial(const LanguageModel& model,
                                                   std::span<const TokenId> source,
                                                   std::span<const TokenId> prefix,
                                                   std::span<const TokenId> drafts) {
  check_block(drafts);
  const Sequence stream = extend(prefix, drafts);
  const std::span<const TokenId> view(stream);
  std::vector<PositionScores> out;
  out.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    out.push_back(model.next_distribution(source, view.first(prefix.size() + i)));
  }
  return out;
}

std::vector<PositionScores> score_positions_parallel(const LanguageModel& model,
                                                     std::span<const TokenId> source,
                                                     std::span<const TokenId> prefix,
                                                     std::span<const TokenId> drafts) {
  check_block(drafts);
  const Sequence stream = extend(prefix, drafts);
  const std::span<const TokenId> view(stream);
  const long k = static_cast<long>(drafts.size());
  const long work = k * static_cast<long>(model.vocab_size());
  std::vector<PositionScores> out(drafts.size());
  std::exception_ptr failure;

#pragma omp parallel for schedule(static) if (work >= kParallelWorkThreshold)
  for (long i = 0; i < k; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          model.next_distribution(source, view.first(prefix.size() + static_cast<std::size_t>(i)));
    } catch (...) {
#pragma omp critical(specdec_score_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace specdec
