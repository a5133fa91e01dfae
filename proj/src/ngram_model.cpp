// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <fmt/core.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "specdec/models.hpp"

namespace specdec {

double log_sum_exp(std::span<const double> logprobs) {
  if (logprobs.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(logprobs.begin(), logprobs.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : logprobs) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

TokenId argmax(std::span<const double> logprobs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logprobs.size(); ++i) {
    if (logprobs[i] > logprobs[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

std::string format_context(std::span<const TokenId> ctx) {
  return fmt::format("[{}]", fmt::join(ctx, ","));
}

namespace {

void check_tokens(std::span<const TokenId> tokens, int vocab_size, const char* what) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || tokens[i] >= vocab_size) {
      throw Error(ErrorCode::kTokenOutOfRange,
                  fmt::format("{}[{}]: token id {} outside vocabulary of size {}", what, i,
                              tokens[i], vocab_size));
    }
  }
}

}  // namespace

NgramModel::NgramModel(Vocabulary vocab, int order, Table table)
    : vocab_(std::move(vocab)), order_(order), table_(std::move(table)) {
  if (order_ < 1) {
    throw Error(ErrorCode::kBadArgument, fmt::format("order: must be >= 1, got {}", order_));
  }
  const int v = vocab_.size();
  for (const auto& [ctx, logprobs] : table_) {
    const std::string where = format_context(ctx);
    if (static_cast<int>(ctx.size()) > order_ - 1) {
      throw Error(ErrorCode::kBadContext,
                  fmt::format("ctx {}: length {} exceeds order-1 = {}", where, ctx.size(),
                              order_ - 1));
    }
    check_tokens(ctx, v, "ctx");
    if (static_cast<int>(logprobs.size()) != v) {
      throw Error(ErrorCode::kUnnormalizedDistribution,
                  fmt::format("ctx {}: logprobs length {} != vocabulary size {}", where,
                              logprobs.size(), v));
    }
    for (double lp : logprobs) {
      if (!std::isfinite(lp)) {
        throw Error(ErrorCode::kUnnormalizedDistribution,
                    fmt::format("ctx {}: non-finite logprob", where));
      }
    }
    const double lse = log_sum_exp(logprobs);
    if (!(std::abs(lse) <= kNormalizationTolerance)) {
      throw Error(ErrorCode::kUnnormalizedDistribution,
                  fmt::format("ctx {}: log-sum-exp is {:.3g}, expected 0", where, lse));
    }
  }
  uniform_.assign(static_cast<std::size_t>(v), -std::log(static_cast<double>(v)));
}

NgramModel::Context NgramModel::effective_context(std::span<const TokenId> source,
                                                  std::span<const TokenId> prefix) const {
  const std::size_t stream_len = source.size() + 1 + prefix.size();
  const std::size_t m = std::min(static_cast<std::size_t>(order_ - 1), stream_len);
  Context ctx(m);
  // Fill from the most recent token backwards across prefix, <bos>, source.
  std::size_t out = m;
  for (std::size_t i = prefix.size(); i > 0 && out > 0; --i) ctx[--out] = prefix[i - 1];
  if (out > 0) ctx[--out] = kBos;
  for (std::size_t i = source.size(); i > 0 && out > 0; --i) ctx[--out] = source[i - 1];
  return ctx;
}

PositionScores NgramModel::next_distribution(std::span<const TokenId> source,
                                             std::span<const TokenId> prefix) const {
  check_tokens(source, vocab_size(), "source");
  check_tokens(prefix, vocab_size(), "prefix");
  const auto it = table_.find(effective_context(source, prefix));
  if (it == table_.end()) return PositionScores{uniform_};
  return PositionScores{it->second};
}

Sequence greedy_rollout(const LanguageModel& model, std::span<const TokenId> source,
                        std::span<const TokenId> prefix, int steps) {
  if (steps < 1) {
    throw Error(ErrorCode::kBadArgument, fmt::format("steps: must be >= 1, got {}", steps));
  }
  Sequence stream(prefix.begin(), prefix.end());
  Sequence out;
  for (int s = 0; s < steps; ++s) {
    const TokenId next = model.next_distribution(source, stream).argmax();
    stream.push_back(next);
    out.push_back(next);
    if (next == kEos) break;
  }
  return out;
}

NgramModel fit_ngram(const Vocabulary& vocab, const Corpus& corpus, int order, double smoothing) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus: no examples");
  if (order < 1) {
    throw Error(ErrorCode::kBadArgument, fmt::format("order: must be >= 1, got {}", order));
  }
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("smoothing: must be finite and >= 0, got {}", smoothing));
  }
  const int v = vocab.size();
  // Context keys only depend on the order, so a throwaway model with an empty
  // table computes them.
  const NgramModel keyer(vocab, order, {});
  std::map<NgramModel::Context, std::vector<double>> counts;
  for (std::size_t e = 0; e < corpus.size(); ++e) {
    const auto& ex = corpus[e];
    if (ex.target.empty() || ex.target.back() != kEos) {
      throw Error(ErrorCode::kBadTargetTermination,
                  fmt::format("corpus[{}]: target does not end with EOS", e));
    }
    check_tokens(ex.source, v, "source");
    validate_sequence(ex.target, v);
    const std::span<const TokenId> target(ex.target);
    for (std::size_t t = 0; t < target.size(); ++t) {
      auto& row = counts[keyer.effective_context(ex.source, target.first(t))];
      if (row.empty()) row.assign(static_cast<std::size_t>(v), 0.0);
      row[static_cast<std::size_t>(target[t])] += 1.0;
    }
  }
  NgramModel::Table table;
  for (auto& [ctx, row] : counts) {
    double total = 0.0;
    for (double c : row) total += c;
    const double log_denominator = std::log(total + smoothing * v);
    std::vector<double> logprobs(row.size());
    for (std::size_t w = 0; w < row.size(); ++w) {
      const double numerator = row[w] + smoothing;
      logprobs[w] = numerator > 0.0 ? std::max(std::log(numerator) - log_denominator, kLogProbFloor)
                                    : kLogProbFloor;
    }
    table.emplace(ctx, std::move(logprobs));
  }
  return NgramModel(vocab, order, std::move(table));
}

NgramModel random_model(int vocab_size, int order, double concentration, std::uint64_t seed,
                        bool emit_eos) {
  if (order < 1) {
    throw Error(ErrorCode::kBadArgument, fmt::format("order: must be >= 1, got {}", order));
  }
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("concentration: must be finite and > 0, got {}", concentration));
  }
  Vocabulary vocab = Vocabulary::synthetic(vocab_size);
  const int v = vocab.size();

  std::vector<TokenId> eligible;
  if (emit_eos) eligible.push_back(kEos);
  for (TokenId t = kNumReserved; t < v; ++t) eligible.push_back(t);

  RngStream rng(seed, 0);
  // Dirichlet sample in log space: log G(alpha + 1) + log(U) / alpha has the
  // law of log G(alpha) and does not underflow for tiny alpha.
  std::gamma_distribution<double> gamma(concentration + 1.0, 1.0);
  auto draw_distribution = [&] {
    std::vector<double> logx(eligible.size());
    for (double& lx : logx) {
      const double g = gamma(rng);
      double u = rng.uniform01();
      if (u <= 0.0) u = 0x1.0p-53;
      lx = std::log(g) + std::log(u) / concentration;
    }
    const double lse = log_sum_exp(logx);
    std::vector<double> logprobs(static_cast<std::size_t>(v), kLogProbFloor);
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      logprobs[static_cast<std::size_t>(eligible[i])] = std::max(logx[i] - lse, kLogProbFloor);
    }
    return logprobs;
  };

  NgramModel::Table table;
  if (order == 1) {
    table.emplace(NgramModel::Context{}, draw_distribution());
  } else {
    for (int len = 1; len <= order - 1; ++len) {
      NgramModel::Context ctx(static_cast<std::size_t>(len), 0);
      for (;;) {
        table.emplace(ctx, draw_distribution());
        int pos = len - 1;
        while (pos >= 0 && ctx[static_cast<std::size_t>(pos)] == v - 1) {
          ctx[static_cast<std::size_t>(pos)] = 0;
          --pos;
        }
        if (pos < 0) break;
        ++ctx[static_cast<std::size_t>(pos)];
      }
    }
  }
  return NgramModel(std::move(vocab), order, std::move(table));
}

}  // namespace specdec
