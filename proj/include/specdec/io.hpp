// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "specdec/bench.hpp"
#include "specdec/core.hpp"
#include "specdec/models.hpp"

namespace specdec {

inline constexpr std::string_view kModelFormatTag = "specdec-ngram-v1";
inline constexpr std::string_view kReportFormatTag = "specdec-report-v1";

// Model files -------------------------------------------------------------
//
// {"format": "specdec-ngram-v1", "vocab": [...], "order": n,
//  "entries": [{"ctx": [...], "logprobs": [...]}, ...]}
//
// Keys are written in that order, entries in increasing ctx order, one entry
// per line, and every float with 17 significant digits, so equal models
// serialize to identical bytes.

std::string serialize_model(const NgramModel& model);
NgramModel parse_model(std::string_view text);
NgramModel load_model(const std::filesystem::path& path);
void save_model(const NgramModel& model, const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// "fnv1a64:<16 hex digits>" over the canonical serialization.
std::string model_identifier(const NgramModel& model);

// Corpus files ------------------------------------------------------------
//
// One example per line: source symbols, a tab, target symbols; symbols are
// separated by single spaces. CRLF is accepted. Blank lines are skipped. EOS
// is appended to targets that lack it.

Corpus parse_corpus(std::istream& in, const Vocabulary& vocab);
Corpus load_corpus(const std::filesystem::path& path, const Vocabulary& vocab);

/// Reserved symbols followed by every other symbol of the corpus in order of
/// first appearance. Used when fitting a model from scratch.
Vocabulary vocabulary_from_corpus(const std::filesystem::path& path);

// Reports -----------------------------------------------------------------
//
// Wall-clock fields are not serialized so that repeated runs produce
// byte-identical files; they read back as zero.

std::string serialize_report(const RunReport& report);
RunReport parse_report(std::string_view text);
void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport load_report(const std::filesystem::path& path);

// Tables ------------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const Table&) const = default;
};

/// Comma-separated, header first, one row per line, "\n" line endings.
/// Fields containing a comma, quote or newline are double-quoted.
std::string serialize_table(const Table& table);
Table parse_table(std::string_view text);
void write_table(const Table& table, const std::filesystem::path& path);
Table load_table(const std::filesystem::path& path);

/// Fixed rendering used in tables and summary lines.
std::string format_real(double value);

Table block_size_table(const std::vector<BlockSizeRow>& rows);
Table verification_table(const std::vector<VerifyGridRow>& rows);

}  // namespace specdec
