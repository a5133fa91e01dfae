// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "specdec/io.hpp"

#include <fmt/core.h>

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace specdec {

using ojson = nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, fmt::format("{}: cannot open for reading", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoFailure, fmt::format("{}: read failed", path.string()));
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, fmt::format("{}: cannot open for writing", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, fmt::format("{}: write failed", path.string()));
}

// Wraps any error raised while decoding a file with the file name.
template <typename F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.detail()));
  }
}

std::string real17(double x) { return fmt::format("{:.17g}", x); }

// Checked accessors that report the JSON field path on mismatch.
const ojson& field(const ojson& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected an object", path));
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("{}.{}: missing field", path, key));
  }
  return *it;
}

const ojson& array_field(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = field(obj, key, path);
  if (!v.is_array()) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("{}.{}: expected an array", path, key));
  }
  return v;
}

double as_real(const ojson& v, const std::string& path) {
  if (!v.is_number()) throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected a number", path));
  return v.get<double>();
}

std::int64_t as_int(const ojson& v, const std::string& path) {
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected an integer", path));
  }
  return v.get<std::int64_t>();
}

std::uint64_t as_uint(const ojson& v, const std::string& path) {
  if (!v.is_number_unsigned()) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected a non-negative integer", path));
  }
  return v.get<std::uint64_t>();
}

int as_int32(const ojson& v, const std::string& path) {
  const std::int64_t x = as_int(v, path);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("{}: integer out of range", path));
  }
  return static_cast<int>(x);
}

bool as_bool(const ojson& v, const std::string& path) {
  if (!v.is_boolean()) throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected a boolean", path));
  return v.get<bool>();
}

std::string as_string(const ojson& v, const std::string& path) {
  if (!v.is_string()) throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected a string", path));
  return v.get<std::string>();
}

Sequence as_tokens(const ojson& v, const std::string& path) {
  if (!v.is_array()) throw Error(ErrorCode::kMalformedJson, fmt::format("{}: expected an array", path));
  Sequence out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_int32(v[i], fmt::format("{}[{}]", path, i)));
  }
  return out;
}

ojson parse_json(std::string_view text) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, fmt::format("byte {}: {}", e.byte, e.what()));
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_model(const NgramModel& model) {
  std::string out;
  out += fmt::format("{{\"format\":{},\"vocab\":[", ojson(std::string(kModelFormatTag)).dump());
  const auto& symbols = model.vocab().symbols();
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) out += ',';
    out += ojson(symbols[i]).dump();
  }
  out += fmt::format("],\"order\":{},\"entries\":[", model.order());
  bool first = true;
  for (const auto& [ctx, logprobs] : model.table()) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "{\"ctx\":[";
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(ctx[i]);
    }
    out += "],\"logprobs\":[";
    for (std::size_t i = 0; i < logprobs.size(); ++i) {
      if (i) out += ',';
      out += real17(logprobs[i]);
    }
    out += "]}";
  }
  out += "\n]}\n";
  return out;
}

NgramModel parse_model(std::string_view text) {
  const ojson doc = parse_json(text);
  const std::string tag = as_string(field(doc, "format", "$"), "$.format");
  if (tag != kModelFormatTag) {
    throw Error(ErrorCode::kBadFormatTag,
                fmt::format("$.format: expected \"{}\", got \"{}\"", kModelFormatTag, tag));
  }
  const ojson& vocab_json = array_field(doc, "vocab", "$");
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < vocab_json.size(); ++i) {
    symbols.push_back(as_string(vocab_json[i], fmt::format("$.vocab[{}]", i)));
  }
  if (symbols.size() < 3 || symbols[kBos] != kBosSymbol || symbols[kEos] != kEosSymbol ||
      symbols[kMask] != kMaskSymbol) {
    throw Error(ErrorCode::kBadReservedTokens,
                fmt::format("$.vocab[0..2]: expected [\"{}\",\"{}\",\"{}\"]", kBosSymbol,
                            kEosSymbol, kMaskSymbol));
  }
  Vocabulary vocab(std::move(symbols));
  const int order = as_int32(field(doc, "order", "$"), "$.order");
  if (order < 1) throw Error(ErrorCode::kMalformedJson, fmt::format("$.order: must be >= 1, got {}", order));

  const ojson& entries = array_field(doc, "entries", "$");
  NgramModel::Table table;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const std::string path = fmt::format("$.entries[{}]", e);
    NgramModel::Context ctx = as_tokens(field(entries[e], "ctx", path), path + ".ctx");
    const ojson& lp_json = array_field(entries[e], "logprobs", path);
    std::vector<double> logprobs;
    logprobs.reserve(lp_json.size());
    for (std::size_t i = 0; i < lp_json.size(); ++i) {
      logprobs.push_back(as_real(lp_json[i], fmt::format("{}.logprobs[{}]", path, i)));
    }
    const std::string key = format_context(ctx);
    if (!table.emplace(std::move(ctx), std::move(logprobs)).second) {
      throw Error(ErrorCode::kBadContext, fmt::format("{}: duplicate ctx {}", path, key));
    }
  }
  return NgramModel(std::move(vocab), order, std::move(table));
}

NgramModel load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  return with_path(path, [&] { return parse_model(text); });
}

void save_model(const NgramModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

std::string model_identifier(const NgramModel& model) {
  return fmt::format("fnv1a64:{:016x}", fnv1a64(serialize_model(model)));
}

namespace {

std::vector<std::string_view> split_symbols(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    const std::size_t end = std::min(text.find(' ', pos), text.size());
    if (end > pos) out.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

struct RawLine {
  std::size_t number;
  std::string_view source;
  std::string_view target;
};

// Splits each non-blank line at its single tab; strips a trailing CR.
template <typename F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" ") == std::string::npos) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::kMalformedLine,
                  fmt::format("line {}: expected exactly one tab between source and target", number));
    }
    const std::string_view view(line);
    f(RawLine{number, view.substr(0, tab), view.substr(tab + 1)});
  }
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "read failed");
}

}  // namespace

Corpus parse_corpus(std::istream& in, const Vocabulary& vocab) {
  Corpus corpus;
  for_each_line(in, [&](const RawLine& raw) {
    auto resolve = [&](std::string_view text) {
      Sequence seq;
      for (std::string_view sym : split_symbols(text)) {
        const TokenId id = vocab.find(sym);
        if (id < 0) {
          throw Error(ErrorCode::kUnknownSymbol,
                      fmt::format("line {}: unknown symbol \"{}\"", raw.number, sym));
        }
        seq.push_back(id);
      }
      return seq;
    };
    Example ex{resolve(raw.source), resolve(raw.target)};
    if (ex.target.empty() || (ex.target.size() == 1 && ex.target.front() == kEos)) {
      throw Error(ErrorCode::kEmptyTarget, fmt::format("line {}: empty target", raw.number));
    }
    if (ex.target.back() != kEos) ex.target.push_back(kEos);
    try {
      validate_sequence(ex.target, vocab.size());
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("line {}: target {}", raw.number, e.detail()));
    }
    corpus.push_back(std::move(ex));
  });
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::istringstream in(read_file(path));
  return with_path(path, [&] { return parse_corpus(in, vocab); });
}

Vocabulary vocabulary_from_corpus(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> content;
  std::set<std::string, std::less<>> seen{std::string(kBosSymbol), std::string(kEosSymbol),
                                          std::string(kMaskSymbol)};
  with_path(path, [&] {
    for_each_line(in, [&](const RawLine& raw) {
      for (std::string_view part : {raw.source, raw.target}) {
        for (std::string_view sym : split_symbols(part)) {
          if (seen.insert(std::string(sym)).second) content.emplace_back(sym);
        }
      }
    });
    return 0;
  });
  if (content.empty()) throw Error(ErrorCode::kEmptyCorpus, fmt::format("{}: no content symbols", path.string()));
  return Vocabulary::with_content(content);
}

namespace {

ojson records_json(const std::vector<IterationRecord>& records) {
  ojson arr = ojson::array();
  for (const auto& r : records) {
    arr.push_back(ojson{{"drafted", r.drafted},
                        {"emitted", r.emitted},
                        {"bifurcation", r.bifurcation},
                        {"draft_cost", r.draft_cost},
                        {"verify_cost", r.verify_cost}});
  }
  return arr;
}

}  // namespace

std::string serialize_report(const RunReport& report) {
  const auto& p = report.provenance;
  ojson doc;
  doc["format"] = std::string(kReportFormatTag);
  doc["provenance"] = ojson{
      {"seed", p.seed},
      {"config", ojson{{"k", p.config.k},
                       {"beta", p.config.beta},
                       {"tau", p.config.tau},
                       {"max_len", p.config.max_len},
                       {"strategy", std::string(strategy_name(p.config.strategy))},
                       {"beam_width", p.config.beam_width},
                       {"seed", p.config.seed}}},
      {"costs", ojson{{"t_d", p.costs.t_d}, {"t_v", p.costs.t_v}, {"t_ar", p.costs.t_ar}}},
      {"target", p.target_id},
      {"drafter", p.drafter_id}};
  ojson histogram = ojson::array();
  for (const auto& b : report.histogram) {
    histogram.push_back(ojson{{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
  }
  doc["aggregate"] = ojson{{"mean_tok", report.mean_tok},
                           {"modeled_latency", report.modeled_latency},
                           {"ar_modeled_latency", report.ar_modeled_latency},
                           {"modeled_speedup", report.modeled_speedup},
                           {"divergence_rate", report.divergence_rate},
                           {"histogram_bucket_width", report.histogram_bucket_width},
                           {"histogram", std::move(histogram)}};
  ojson sequences = ojson::array();
  for (const auto& s : report.sequences) {
    sequences.push_back(ojson{{"source", s.source},
                              {"output", s.output},
                              {"length", s.length},
                              {"tok", s.tok},
                              {"modeled_latency", s.modeled_latency},
                              {"ar_modeled_latency", s.ar_modeled_latency},
                              {"diverged", s.diverged},
                              {"iterations", records_json(s.iterations)}});
  }
  doc["sequences"] = std::move(sequences);
  return doc.dump(1) + "\n";
}

RunReport parse_report(std::string_view text) {
  const ojson doc = parse_json(text);
  const std::string tag = as_string(field(doc, "format", "$"), "$.format");
  if (tag != kReportFormatTag) {
    throw Error(ErrorCode::kBadFormatTag,
                fmt::format("$.format: expected \"{}\", got \"{}\"", kReportFormatTag, tag));
  }
  RunReport report;
  const ojson& prov = field(doc, "provenance", "$");
  auto& p = report.provenance;
  p.seed = as_uint(field(prov, "seed", "$.provenance"), "$.provenance.seed");
  const ojson& cfg = field(prov, "config", "$.provenance");
  const std::string cp = "$.provenance.config";
  p.config.k = as_int32(field(cfg, "k", cp), cp + ".k");
  p.config.beta = as_int32(field(cfg, "beta", cp), cp + ".beta");
  p.config.tau = as_real(field(cfg, "tau", cp), cp + ".tau");
  p.config.max_len = as_int32(field(cfg, "max_len", cp), cp + ".max_len");
  p.config.strategy = parse_strategy(as_string(field(cfg, "strategy", cp), cp + ".strategy"));
  p.config.beam_width = as_int32(field(cfg, "beam_width", cp), cp + ".beam_width");
  p.config.seed = as_uint(field(cfg, "seed", cp), cp + ".seed");
  const ojson& costs = field(prov, "costs", "$.provenance");
  p.costs.t_d = as_real(field(costs, "t_d", "$.provenance.costs"), "$.provenance.costs.t_d");
  p.costs.t_v = as_real(field(costs, "t_v", "$.provenance.costs"), "$.provenance.costs.t_v");
  p.costs.t_ar = as_real(field(costs, "t_ar", "$.provenance.costs"), "$.provenance.costs.t_ar");
  p.target_id = as_string(field(prov, "target", "$.provenance"), "$.provenance.target");
  p.drafter_id = as_string(field(prov, "drafter", "$.provenance"), "$.provenance.drafter");

  const ojson& agg = field(doc, "aggregate", "$");
  const std::string ap = "$.aggregate";
  report.mean_tok = as_real(field(agg, "mean_tok", ap), ap + ".mean_tok");
  report.modeled_latency = as_real(field(agg, "modeled_latency", ap), ap + ".modeled_latency");
  report.ar_modeled_latency =
      as_real(field(agg, "ar_modeled_latency", ap), ap + ".ar_modeled_latency");
  report.modeled_speedup = as_real(field(agg, "modeled_speedup", ap), ap + ".modeled_speedup");
  report.divergence_rate = as_real(field(agg, "divergence_rate", ap), ap + ".divergence_rate");
  report.histogram_bucket_width =
      as_real(field(agg, "histogram_bucket_width", ap), ap + ".histogram_bucket_width");
  const ojson& hist = array_field(agg, "histogram", ap);
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const std::string hp = fmt::format("{}.histogram[{}]", ap, i);
    report.histogram.push_back(HistogramBucket{as_real(field(hist[i], "lower", hp), hp + ".lower"),
                                               as_real(field(hist[i], "upper", hp), hp + ".upper"),
                                               as_int32(field(hist[i], "count", hp), hp + ".count")});
  }

  const ojson& seqs = array_field(doc, "sequences", "$");
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const std::string sp = fmt::format("$.sequences[{}]", i);
    const ojson& s = seqs[i];
    SequenceReport seq;
    seq.source = as_tokens(field(s, "source", sp), sp + ".source");
    seq.output = as_tokens(field(s, "output", sp), sp + ".output");
    seq.length = as_int32(field(s, "length", sp), sp + ".length");
    seq.tok = as_real(field(s, "tok", sp), sp + ".tok");
    seq.modeled_latency = as_real(field(s, "modeled_latency", sp), sp + ".modeled_latency");
    seq.ar_modeled_latency =
        as_real(field(s, "ar_modeled_latency", sp), sp + ".ar_modeled_latency");
    seq.diverged = as_bool(field(s, "diverged", sp), sp + ".diverged");
    const ojson& its = array_field(s, "iterations", sp);
    for (std::size_t j = 0; j < its.size(); ++j) {
      const std::string ip = fmt::format("{}.iterations[{}]", sp, j);
      const ojson& r = its[j];
      seq.iterations.push_back(
          IterationRecord{as_int32(field(r, "drafted", ip), ip + ".drafted"),
                          as_int32(field(r, "emitted", ip), ip + ".emitted"),
                          as_int32(field(r, "bifurcation", ip), ip + ".bifurcation"),
                          as_real(field(r, "draft_cost", ip), ip + ".draft_cost"),
                          as_real(field(r, "verify_cost", ip), ip + ".verify_cost")});
    }
    report.sequences.push_back(std::move(seq));
  }
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  write_file(path, serialize_report(report));
}

RunReport load_report(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  return with_path(path, [&] { return parse_report(text); });
}

namespace {

std::string quote_field(const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string serialize_table(const Table& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += quote_field(row[i]);
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

Table parse_table(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      lines.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kMalformedLine, "table: unterminated quoted field");
  if (any || !cell.empty() || !row.empty()) {
    row.push_back(std::move(cell));
    lines.push_back(std::move(row));
  }
  if (lines.empty()) throw Error(ErrorCode::kMalformedLine, "table: missing header row");
  Table table;
  table.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != table.header.size()) {
      throw Error(ErrorCode::kMalformedLine,
                  fmt::format("line {}: {} fields, header has {}", i + 1, lines[i].size(),
                              table.header.size()));
    }
    table.rows.push_back(std::move(lines[i]));
  }
  return table;
}

void write_table(const Table& table, const std::filesystem::path& path) {
  write_file(path, serialize_table(table));
}

Table load_table(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  return with_path(path, [&] { return parse_table(text); });
}

std::string format_real(double value) { return fmt::format("{:.6f}", value); }

Table block_size_table(const std::vector<BlockSizeRow>& rows) {
  Table t{{"k", "tok", "speed"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.k), format_real(r.mean_tok), format_real(r.modeled_speedup)});
  }
  return t;
}

Table verification_table(const std::vector<VerifyGridRow>& rows) {
  Table t{{"beta", "tau", "tok", "speed", "divergence"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.beta), format_real(r.tau), format_real(r.mean_tok),
                      format_real(r.modeled_speedup), format_real(r.divergence_rate)});
  }
  return t;
}

}  // namespace specdec
