// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "specdec/core.hpp"
#include "specdec/decode.hpp"
#include "specdec/drafters.hpp"
#include "specdec/models.hpp"

namespace specdec {

/// Mean tokens emitted per iteration, corrected tokens included.
double compute_tok(std::span<const IterationRecord> records);

/// Sum of draft_cost + verify_cost over the records.
double modeled_cost(std::span<const IterationRecord> records);

/// Draft-then-verify latency for a length-L output at `tok` tokens per
/// iteration: (L / tok) * t_d + (L / tok) * t_v.
double estimate_latency(double length, double tok, const CostModel& costs);

/// Expected tokens per iteration under vanilla verification when every draft
/// position is corrupted independently with probability p:
///   sum_{i=1}^{k-1} i p (1-p)^{i-1} + k (1-p)^{k-1}.
double expected_accept_noisy_oracle(int k, double p);

/// Builds the drafter for one corpus sequence. Called concurrently from
/// worker threads, so it must only read shared state.
using DrafterFactory = std::function<std::unique_ptr<Drafter>(std::size_t sequence_index)>;

DrafterFactory self_rollout_factory(const LanguageModel& drafter);

/// Noisy-oracle drafters whose random stream is (seed, sequence_index).
DrafterFactory noisy_oracle_factory(const LanguageModel& target, double p, std::uint64_t seed);

/// Decodes one source with the strategy in `cfg`. `drafter` may be null for
/// the autoregressive strategies.
DecodeResult decode_with_strategy(const LanguageModel& target, Drafter* drafter,
                                  std::span<const TokenId> source, const DecodeConfig& cfg,
                                  const CostModel& costs);

struct CorpusRun {
  std::vector<DecodeResult> results;
  std::vector<double> wall_seconds;
};

/// Reference runner: sequences in corpus order on the calling thread.
CorpusRun decode_corpus_serial(const LanguageModel& target, const DrafterFactory& factory,
                               const Corpus& corpus, const DecodeConfig& cfg,
                               const CostModel& costs);

/// Sequences spread over `jobs` OpenMP threads. Results are identical to
/// decode_corpus_serial because each sequence owns its drafter and stream.
CorpusRun decode_corpus_parallel(const LanguageModel& target, const DrafterFactory& factory,
                                 const Corpus& corpus, const DecodeConfig& cfg,
                                 const CostModel& costs, int jobs);

struct SequenceReport {
  Sequence source;
  Sequence output;
  std::vector<IterationRecord> iterations;
  int length = 0;
  double tok = 0.0;
  double modeled_latency = 0.0;
  double ar_modeled_latency = 0.0;
  double wall_seconds = 0.0;
  bool diverged = false;

  bool operator==(const SequenceReport&) const = default;
};

struct HistogramBucket {
  double lower = 0.0;
  double upper = 0.0;
  int count = 0;

  bool operator==(const HistogramBucket&) const = default;
};

struct Provenance {
  std::uint64_t seed = 0;
  DecodeConfig config;
  CostModel costs;
  std::string target_id;
  std::string drafter_id;

  bool operator==(const Provenance&) const = default;
};

struct RunReport {
  Provenance provenance;
  std::vector<SequenceReport> sequences;
  double mean_tok = 0.0;
  double modeled_latency = 0.0;
  double ar_modeled_latency = 0.0;
  double modeled_speedup = 0.0;
  double wall_seconds = 0.0;
  double ar_wall_seconds = 0.0;
  double wall_speedup = 0.0;
  double divergence_rate = 0.0;
  double histogram_bucket_width = 0.0;
  std::vector<HistogramBucket> histogram;

  bool operator==(const RunReport&) const = default;
};

inline constexpr double kDefaultBucketWidth = 0.5;

/// Assembles per-sequence and aggregate statistics. `baseline` must be the
/// AR greedy run over the same corpus; it supplies the speedup denominator
/// and the reference outputs for divergence.
RunReport build_report(const Corpus& corpus, const CorpusRun& run, const CorpusRun& baseline,
                       Provenance provenance, double bucket_width = kDefaultBucketWidth);

/// Per-sequence modeled speedup of `report` over `baseline`, bucketed into
/// [i*w, (i+1)*w). Only non-empty buckets are returned, in increasing order.
std::vector<HistogramBucket> speedup_histogram(const RunReport& report, const RunReport& baseline,
                                               double bucket_width);

/// Buckets raw speedup values; the building block of speedup_histogram.
std::vector<HistogramBucket> bucket_speedups(std::span<const double> speedups,
                                             double bucket_width);

struct BlockSizeRow {
  int k = 0;
  double mean_tok = 0.0;
  double modeled_speedup = 0.0;

  bool operator==(const BlockSizeRow&) const = default;
};

/// One full corpus run per k with everything else taken from `tmpl`.
std::vector<BlockSizeRow> sweep_block_size(const LanguageModel& target,
                                           const DrafterFactory& factory, const Corpus& corpus,
                                           std::span<const int> k_values, const DecodeConfig& tmpl,
                                           const CostModel& costs, int jobs = 1);

struct VerifyGridRow {
  int beta = 0;
  double tau = 0.0;
  double mean_tok = 0.0;
  double modeled_speedup = 0.0;
  double divergence_rate = 0.0;

  bool operator==(const VerifyGridRow&) const = default;
};

/// Relaxed-verification run for every (beta, tau) cell, beta-major.
std::vector<VerifyGridRow> sweep_verification(const LanguageModel& target,
                                              const DrafterFactory& factory, const Corpus& corpus,
                                              std::span<const int> beta_values,
                                              std::span<const double> tau_values,
                                              const DecodeConfig& tmpl, const CostModel& costs,
                                              int jobs = 1);

}  // namespace specdec
