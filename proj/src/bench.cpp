// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "specdec/bench.hpp"

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <map>

namespace specdec {

double compute_tok(std::span<const IterationRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyRecords, "records: no iterations");
  long emitted = 0;
  for (const auto& r : records) emitted += r.emitted;
  return static_cast<double>(emitted) / static_cast<double>(records.size());
}

double modeled_cost(std::span<const IterationRecord> records) {
  double total = 0.0;
  for (const auto& r : records) total += r.draft_cost + r.verify_cost;
  return total;
}

double estimate_latency(double length, double tok, const CostModel& costs) {
  if (!(tok > 0.0)) {
    throw Error(ErrorCode::kNonpositiveTok, fmt::format("tok: must be > 0, got {}", tok));
  }
  if (!(length >= 1.0)) {
    throw Error(ErrorCode::kBadArgument, fmt::format("length: must be >= 1, got {}", length));
  }
  const double iterations = length / tok;
  return iterations * costs.t_d + iterations * costs.t_v;
}

double expected_accept_noisy_oracle(int k, double p) {
  if (k < 1) throw Error(ErrorCode::kNonpositiveK, fmt::format("k: must be >= 1, got {}", k));
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kBadArgument, fmt::format("p: must be in [0,1], got {}", p));
  }
  double expected = 0.0;
  for (int i = 1; i < k; ++i) expected += i * p * std::pow(1.0 - p, i - 1);
  return expected + k * std::pow(1.0 - p, k - 1);
}

DrafterFactory self_rollout_factory(const LanguageModel& drafter) {
  return [&drafter](std::size_t) { return std::make_unique<SelfRolloutDrafter>(drafter); };
}

DrafterFactory noisy_oracle_factory(const LanguageModel& target, double p, std::uint64_t seed) {
  return [&target, p, seed](std::size_t index) {
    return std::make_unique<NoisyOracleDrafter>(target, p, RngStream(seed, index));
  };
}

DecodeResult decode_with_strategy(const LanguageModel& target, Drafter* drafter,
                                  std::span<const TokenId> source, const DecodeConfig& cfg,
                                  const CostModel& costs) {
  switch (cfg.strategy) {
    case Strategy::kArGreedy:
      return ar_greedy_decode(target, source, cfg.max_len, costs);
    case Strategy::kArBeam:
      return ar_beam_decode(target, source, cfg.beam_width, cfg.max_len, costs);
    case Strategy::kSpecDecVanilla:
    case Strategy::kSpecDecRelaxed:
      if (drafter == nullptr) {
        throw Error(ErrorCode::kBadArgument,
                    fmt::format("strategy {} needs a drafter", strategy_name(cfg.strategy)));
      }
      return specdec_decode(target, *drafter, source, cfg, costs);
  }
  throw Error(ErrorCode::kBadArgument, "strategy: unhandled value");
}

namespace {

bool needs_drafter(Strategy s) {
  return s == Strategy::kSpecDecVanilla || s == Strategy::kSpecDecRelaxed;
}

std::pair<DecodeResult, double> decode_timed(const LanguageModel& target,
                                             const DrafterFactory& factory, const Example& ex,
                                             std::size_t index, const DecodeConfig& cfg,
                                             const CostModel& costs) {
  std::unique_ptr<Drafter> drafter;
  if (needs_drafter(cfg.strategy)) {
    if (!factory) throw Error(ErrorCode::kBadArgument, "drafter: no factory supplied");
    drafter = factory(index);
  }
  const auto start = std::chrono::steady_clock::now();
  DecodeResult result = decode_with_strategy(target, drafter.get(), ex.source, cfg, costs);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {std::move(result), elapsed.count()};
}

}  // namespace

CorpusRun decode_corpus_serial(const LanguageModel& target, const DrafterFactory& factory,
                               const Corpus& corpus, const DecodeConfig& cfg,
                               const CostModel& costs) {
  validate_config(cfg, target.vocab_size());
  CorpusRun run;
  run.results.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto [result, seconds] = decode_timed(target, factory, corpus[i], i, cfg, costs);
    run.results.push_back(std::move(result));
    run.wall_seconds.push_back(seconds);
  }
  return run;
}

CorpusRun decode_corpus_parallel(const LanguageModel& target, const DrafterFactory& factory,
                                 const Corpus& corpus, const DecodeConfig& cfg,
                                 const CostModel& costs, int jobs) {
  if (jobs < 1) throw Error(ErrorCode::kBadArgument, fmt::format("jobs: must be >= 1, got {}", jobs));
  validate_config(cfg, target.vocab_size());
  CorpusRun run;
  run.results.resize(corpus.size());
  run.wall_seconds.resize(corpus.size());
  std::exception_ptr failure;
  const long n = static_cast<long>(corpus.size());

#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (long i = 0; i < n; ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      auto [result, seconds] = decode_timed(target, factory, corpus[idx], idx, cfg, costs);
      run.results[idx] = std::move(result);
      run.wall_seconds[idx] = seconds;
    } catch (...) {
#pragma omp critical(specdec_corpus_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return run;
}

std::vector<HistogramBucket> bucket_speedups(std::span<const double> speedups,
                                             double bucket_width) {
  if (!(bucket_width > 0.0)) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("bucket_width: must be > 0, got {}", bucket_width));
  }
  std::map<long, int> counts;
  for (double s : speedups) ++counts[static_cast<long>(std::floor(s / bucket_width))];
  std::vector<HistogramBucket> buckets;
  for (const auto& [index, count] : counts) {
    buckets.push_back(HistogramBucket{static_cast<double>(index) * bucket_width,
                                      static_cast<double>(index + 1) * bucket_width, count});
  }
  return buckets;
}

std::vector<HistogramBucket> speedup_histogram(const RunReport& report, const RunReport& baseline,
                                               double bucket_width) {
  if (report.sequences.size() != baseline.sequences.size()) {
    throw Error(ErrorCode::kCorpusMismatch,
                fmt::format("reports cover {} and {} sequences", report.sequences.size(),
                            baseline.sequences.size()));
  }
  std::vector<double> speedups;
  speedups.reserve(report.sequences.size());
  for (std::size_t i = 0; i < report.sequences.size(); ++i) {
    if (report.sequences[i].source != baseline.sequences[i].source) {
      throw Error(ErrorCode::kCorpusMismatch,
                  fmt::format("sequence {}: sources differ between reports", i));
    }
    speedups.push_back(baseline.sequences[i].modeled_latency /
                       report.sequences[i].modeled_latency);
  }
  return bucket_speedups(speedups, bucket_width);
}

RunReport build_report(const Corpus& corpus, const CorpusRun& run, const CorpusRun& baseline,
                       Provenance provenance, double bucket_width) {
  if (run.results.size() != corpus.size() || baseline.results.size() != corpus.size()) {
    throw Error(ErrorCode::kCorpusMismatch,
                fmt::format("corpus has {} sequences, run {}, baseline {}", corpus.size(),
                            run.results.size(), baseline.results.size()));
  }
  RunReport report;
  report.provenance = std::move(provenance);
  report.histogram_bucket_width = bucket_width;
  long emitted = 0;
  long iterations = 0;
  long diverged = 0;
  std::vector<double> speedups;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const DecodeResult& r = run.results[i];
    const DecodeResult& ar = baseline.results[i];
    SequenceReport seq;
    seq.source = corpus[i].source;
    seq.output = r.output;
    seq.iterations = r.iterations;
    seq.length = static_cast<int>(r.output.size());
    seq.tok = compute_tok(r.iterations);
    seq.modeled_latency = modeled_cost(r.iterations);
    seq.ar_modeled_latency = modeled_cost(ar.iterations);
    seq.wall_seconds = run.wall_seconds.empty() ? 0.0 : run.wall_seconds[i];
    seq.diverged = r.output != ar.output;

    for (const auto& rec : r.iterations) emitted += rec.emitted;
    iterations += static_cast<long>(r.iterations.size());
    diverged += seq.diverged ? 1 : 0;
    report.modeled_latency += seq.modeled_latency;
    report.ar_modeled_latency += seq.ar_modeled_latency;
    report.wall_seconds += seq.wall_seconds;
    if (!baseline.wall_seconds.empty()) report.ar_wall_seconds += baseline.wall_seconds[i];
    speedups.push_back(seq.ar_modeled_latency / seq.modeled_latency);
    report.sequences.push_back(std::move(seq));
  }
  if (iterations > 0) report.mean_tok = static_cast<double>(emitted) / static_cast<double>(iterations);
  if (report.modeled_latency > 0.0) {
    report.modeled_speedup = report.ar_modeled_latency / report.modeled_latency;
  }
  if (report.wall_seconds > 0.0) report.wall_speedup = report.ar_wall_seconds / report.wall_seconds;
  if (!corpus.empty()) {
    report.divergence_rate = static_cast<double>(diverged) / static_cast<double>(corpus.size());
  }
  report.histogram = bucket_speedups(speedups, bucket_width);
  return report;
}

namespace {

struct Aggregate {
  double mean_tok = 0.0;
  double modeled_speedup = 0.0;
  double divergence_rate = 0.0;
};

Aggregate aggregate(const Corpus& corpus, const CorpusRun& run, const CorpusRun& baseline) {
  const RunReport report = build_report(corpus, run, baseline, Provenance{});
  return {report.mean_tok, report.modeled_speedup, report.divergence_rate};
}

CorpusRun run_corpus(const LanguageModel& target, const DrafterFactory& factory,
                     const Corpus& corpus, const DecodeConfig& cfg, const CostModel& costs,
                     int jobs) {
  return jobs == 1 ? decode_corpus_serial(target, factory, corpus, cfg, costs)
                   : decode_corpus_parallel(target, factory, corpus, cfg, costs, jobs);
}

}  // namespace

std::vector<BlockSizeRow> sweep_block_size(const LanguageModel& target,
                                           const DrafterFactory& factory, const Corpus& corpus,
                                           std::span<const int> k_values, const DecodeConfig& tmpl,
                                           const CostModel& costs, int jobs) {
  if (k_values.empty()) throw Error(ErrorCode::kBadArgument, "k_values: empty list");
  DecodeConfig ar_cfg = tmpl;
  ar_cfg.strategy = Strategy::kArGreedy;
  const CorpusRun baseline = run_corpus(target, factory, corpus, ar_cfg, costs, jobs);
  std::vector<BlockSizeRow> rows;
  for (int k : k_values) {
    DecodeConfig cfg = tmpl;
    cfg.k = k;
    const Aggregate agg =
        aggregate(corpus, run_corpus(target, factory, corpus, cfg, costs, jobs), baseline);
    rows.push_back(BlockSizeRow{k, agg.mean_tok, agg.modeled_speedup});
  }
  return rows;
}

std::vector<VerifyGridRow> sweep_verification(const LanguageModel& target,
                                              const DrafterFactory& factory, const Corpus& corpus,
                                              std::span<const int> beta_values,
                                              std::span<const double> tau_values,
                                              const DecodeConfig& tmpl, const CostModel& costs,
                                              int jobs) {
  if (beta_values.empty() || tau_values.empty()) {
    throw Error(ErrorCode::kBadArgument, "beta/tau grids: empty list");
  }
  DecodeConfig ar_cfg = tmpl;
  ar_cfg.strategy = Strategy::kArGreedy;
  const CorpusRun baseline = run_corpus(target, factory, corpus, ar_cfg, costs, jobs);
  std::vector<VerifyGridRow> rows;
  for (int beta : beta_values) {
    for (double tau : tau_values) {
      DecodeConfig cfg = tmpl;
      cfg.strategy = Strategy::kSpecDecRelaxed;
      cfg.beta = beta;
      cfg.tau = tau;
      const Aggregate agg =
          aggregate(corpus, run_corpus(target, factory, corpus, cfg, costs, jobs), baseline);
      rows.push_back(VerifyGridRow{beta, tau, agg.mean_tok, agg.modeled_speedup,
                                   agg.divergence_rate});
    }
  }
  return rows;
}

}  // namespace specdec
