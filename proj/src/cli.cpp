// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "specdec/cli.hpp"

#include <fmt/core.h>

#include <CLI11.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "specdec/bench.hpp"
#include "specdec/io.hpp"

namespace specdec {

namespace {

CostModel parse_costs(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kBadArgument, fmt::format("--costs: \"{}\" is not a number", item));
    }
  }
  if (parts.size() != 3) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("--costs: expected td,tv,tar, got \"{}\"", text));
  }
  CostModel costs{parts[0], parts[1], parts[2]};
  try {
    validate_costs(costs);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("--costs: {}", e.detail()));
  }
  return costs;
}

std::string_view flag_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonpositiveK: return "--k";
    case ErrorCode::kBetaExceedsVocab: return "--beta";
    case ErrorCode::kNegativeTau: return "--tau";
    case ErrorCode::kZeroMaxLen: return "--max-len";
    default: return "";
  }
}

DecodeConfig checked_config(const DecodeConfig& cfg, int vocab_size) {
  try {
    return validate_config(cfg, vocab_size);
  } catch (const Error& e) {
    const std::string_view flag = flag_for(e.code());
    if (flag.empty()) throw;
    throw Error(e.code(), fmt::format("{}: {}", flag, e.detail()));
  }
}

// Flags shared by every decoding subcommand.
struct DecodeFlags {
  std::string target_path;
  std::string drafter_path;
  std::optional<double> noisy_oracle;
  std::string input_path;
  std::string strategy = "specdec-relaxed";
  int k = 25;
  int beta = 3;
  double tau = 1.0;
  int max_len = 200;
  int beam_width = 5;
  std::uint64_t seed = 0;
  std::string costs = "1,2,2";
  int jobs = 1;

  void attach(CLI::App* cmd, bool with_k, bool with_verify) {
    cmd->add_option("--target", target_path, "Target model file")->required();
    auto* drafter = cmd->add_option("--drafter", drafter_path, "Drafter model file (self-rollout)");
    auto* noisy = cmd->add_option("--noisy-oracle", noisy_oracle,
                                  "Use a noisy-oracle drafter with this corruption probability");
    drafter->excludes(noisy);
    cmd->add_option("--input", input_path, "Corpus file")->required();
    cmd->add_option("--strategy", strategy,
                    "ar-greedy | ar-beam | specdec-vanilla | specdec-relaxed");
    if (with_k) cmd->add_option("--k", k, "Block size");
    if (with_verify) {
      cmd->add_option("--beta", beta, "Top-beta rank bound");
      cmd->add_option("--tau", tau, "Log-likelihood gap tolerance");
    }
    cmd->add_option("--max-len", max_len, "Output length cap");
    cmd->add_option("--beam-width", beam_width, "Beam width for ar-beam");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--costs", costs, "Simulated costs td,tv,tar");
    cmd->add_option("--jobs", jobs, "Worker threads across corpus sequences");
  }
};

// Everything a decoding subcommand needs once files are loaded.
struct Session {
  std::unique_ptr<NgramModel> target;
  std::unique_ptr<NgramModel> drafter_model;
  DrafterFactory factory;
  std::string drafter_id = "none";
  Corpus corpus;
  DecodeConfig cfg;
  CostModel costs;
  int jobs = 1;
};

Session open_session(const DecodeFlags& f) {
  Session s;
  s.costs = parse_costs(f.costs);
  if (f.jobs < 1) throw Error(ErrorCode::kBadArgument, fmt::format("--jobs: must be >= 1, got {}", f.jobs));
  s.jobs = f.jobs;
  if (f.noisy_oracle && !(*f.noisy_oracle >= 0.0 && *f.noisy_oracle <= 1.0)) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("--noisy-oracle: must be in [0,1], got {}", *f.noisy_oracle));
  }
  DecodeConfig cfg;
  try {
    cfg.strategy = parse_strategy(f.strategy);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("--strategy: {}", e.detail()));
  }
  cfg.k = f.k;
  cfg.beta = f.beta;
  cfg.tau = f.tau;
  cfg.max_len = f.max_len;
  cfg.beam_width = f.beam_width;
  cfg.seed = f.seed;

  s.target = std::make_unique<NgramModel>(load_model(f.target_path));
  s.cfg = checked_config(cfg, s.target->vocab_size());
  if (!f.drafter_path.empty()) {
    s.drafter_model = std::make_unique<NgramModel>(load_model(f.drafter_path));
    if (!(s.drafter_model->vocab() == s.target->vocab())) {
      throw Error(ErrorCode::kBadVocabulary,
                  fmt::format("{}: drafter vocabulary differs from target vocabulary",
                              f.drafter_path));
    }
    s.factory = self_rollout_factory(*s.drafter_model);
    s.drafter_id = model_identifier(*s.drafter_model);
  } else if (f.noisy_oracle) {
    s.factory = noisy_oracle_factory(*s.target, *f.noisy_oracle, f.seed);
    s.drafter_id = fmt::format("noisy-oracle:p={}", *f.noisy_oracle);
  }
  s.corpus = load_corpus(f.input_path, s.target->vocab());
  return s;
}

void require_drafter(const Session& s, Strategy strategy) {
  if ((strategy == Strategy::kSpecDecVanilla || strategy == Strategy::kSpecDecRelaxed) &&
      !s.factory) {
    throw Error(ErrorCode::kBadArgument,
                fmt::format("--drafter or --noisy-oracle is required for --strategy {}",
                            strategy_name(strategy)));
  }
}

CorpusRun run_corpus(const Session& s, const DecodeConfig& cfg) {
  return s.jobs == 1 ? decode_corpus_serial(*s.target, s.factory, s.corpus, cfg, s.costs)
                     : decode_corpus_parallel(*s.target, s.factory, s.corpus, cfg, s.costs, s.jobs);
}

RunReport run_report(const Session& s, const DecodeConfig& cfg, const CorpusRun& baseline) {
  Provenance prov{cfg.seed, cfg, s.costs, model_identifier(*s.target), s.drafter_id};
  return build_report(s.corpus, run_corpus(s, cfg), baseline, std::move(prov));
}

DecodeConfig ar_config(const DecodeConfig& cfg) {
  DecodeConfig ar = cfg;
  ar.strategy = Strategy::kArGreedy;
  return ar;
}

void emit_table(const Table& table, const std::string& path, std::ostream& out) {
  if (!path.empty()) write_table(table, path);
  out << serialize_table(table);
}

int cmd_run(const DecodeFlags& f, const std::string& report_path, std::ostream& out,
            std::ostream& err) {
  const Session s = open_session(f);
  require_drafter(s, s.cfg.strategy);
  const CorpusRun baseline = run_corpus(s, ar_config(s.cfg));
  const RunReport report = run_report(s, s.cfg, baseline);
  if (!report_path.empty()) write_report(report, report_path);
  out << "tok=" << format_real(report.mean_tok) << " speedup=" << format_real(report.modeled_speedup)
      << "\n";
  err << "wall_seconds=" << format_real(report.wall_seconds)
      << " ar_wall_seconds=" << format_real(report.ar_wall_seconds)
      << " divergence=" << format_real(report.divergence_rate) << "\n";
  return 0;
}

int cmd_sweep_k(const DecodeFlags& f, const std::vector<int>& k_list, const std::string& out_path,
                std::ostream& out) {
  const Session s = open_session(f);
  require_drafter(s, s.cfg.strategy);
  for (int k : k_list) {
    DecodeConfig cfg = s.cfg;
    cfg.k = k;
    checked_config(cfg, s.target->vocab_size());
  }
  const auto rows = sweep_block_size(*s.target, s.factory, s.corpus, k_list, s.cfg, s.costs, s.jobs);
  emit_table(block_size_table(rows), out_path, out);
  return 0;
}

int cmd_sweep_verify(const DecodeFlags& f, const std::vector<int>& betas,
                     const std::vector<double>& taus, const std::string& out_path,
                     std::ostream& out) {
  const Session s = open_session(f);
  require_drafter(s, Strategy::kSpecDecRelaxed);
  for (int beta : betas) {
    for (double tau : taus) {
      DecodeConfig cfg = s.cfg;
      cfg.beta = beta;
      cfg.tau = tau;
      checked_config(cfg, s.target->vocab_size());
    }
  }
  const auto rows =
      sweep_verification(*s.target, s.factory, s.corpus, betas, taus, s.cfg, s.costs, s.jobs);
  emit_table(verification_table(rows), out_path, out);
  return 0;
}

int cmd_compare(const DecodeFlags& f, const std::string& out_path, std::ostream& out) {
  const Session s = open_session(f);
  require_drafter(s, Strategy::kSpecDecVanilla);
  const CorpusRun baseline = run_corpus(s, ar_config(s.cfg));
  Table table{{"strategy", "tok", "speed", "divergence"}, {}};
  for (Strategy strategy : {Strategy::kArGreedy, Strategy::kArBeam, Strategy::kSpecDecVanilla,
                            Strategy::kSpecDecRelaxed}) {
    DecodeConfig cfg = s.cfg;
    cfg.strategy = strategy;
    const RunReport r = run_report(s, cfg, baseline);
    table.rows.push_back({std::string(strategy_name(strategy)), format_real(r.mean_tok),
                          format_real(r.modeled_speedup), format_real(r.divergence_rate)});
  }
  emit_table(table, out_path, out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Draft-then-verify decoding over n-gram models", "specdec"};
  app.require_subcommand(1);

  DecodeFlags run_flags;
  std::string report_path;
  auto* run = app.add_subcommand("run", "Decode a corpus and write a report");
  run_flags.attach(run, true, true);
  run->add_option("--report", report_path, "Report output path (JSON)");

  DecodeFlags sk_flags;
  std::vector<int> k_list{5, 10, 15, 20, 25};
  std::string sk_out;
  auto* sweep_k = app.add_subcommand("sweep-k", "Block-size sweep table");
  sk_flags.attach(sweep_k, false, true);
  sweep_k->add_option("--k-list", k_list, "Comma-separated block sizes")->delimiter(',');
  sweep_k->add_option("--out", sk_out, "Table output path (CSV)");

  DecodeFlags sv_flags;
  std::vector<int> beta_list{1, 3, 5};
  std::vector<double> tau_list{0, 1, 2, 3, 4, 5};
  std::string sv_out;
  auto* sweep_v = app.add_subcommand("sweep-verify", "Verification beta x tau grid table");
  sv_flags.attach(sweep_v, true, false);
  sweep_v->add_option("--beta-list", beta_list, "Comma-separated beta values")->delimiter(',');
  sweep_v->add_option("--tau-list", tau_list, "Comma-separated tau values")->delimiter(',');
  sweep_v->add_option("--out", sv_out, "Table output path (CSV)");

  int gen_vocab = 16;
  int gen_order = 3;
  double gen_concentration = 0.5;
  std::uint64_t gen_seed = 0;
  bool gen_no_eos = false;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-model", "Generate a random n-gram model");
  gen->add_option("--vocab-size", gen_vocab, "Vocabulary size including reserved symbols");
  gen->add_option("--order", gen_order, "n-gram order");
  gen->add_option("--concentration", gen_concentration, "Dirichlet concentration");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_flag("--no-eos", gen_no_eos, "Never assign probability to <eos>");
  gen->add_option("--out", gen_out, "Model output path")->required();

  std::string fit_corpus;
  int fit_order = 2;
  double fit_smoothing = 0.0;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "Fit an n-gram model to a corpus by counting");
  fit->add_option("--corpus", fit_corpus, "Corpus file")->required();
  fit->add_option("--order", fit_order, "n-gram order");
  fit->add_option("--smoothing", fit_smoothing, "Additive smoothing");
  fit->add_option("--out", fit_out, "Model output path")->required();

  DecodeFlags cmp_flags;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "Compare all strategies on one corpus");
  cmp_flags.attach(compare, true, true);
  compare->add_option("--out", cmp_out, "Table output path (CSV)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("specdec");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, report_path, out, err);
    if (sweep_k->parsed()) return cmd_sweep_k(sk_flags, k_list, sk_out, out);
    if (sweep_v->parsed()) return cmd_sweep_verify(sv_flags, beta_list, tau_list, sv_out, out);
    if (compare->parsed()) return cmd_compare(cmp_flags, cmp_out, out);
    if (gen->parsed()) {
      if (gen_vocab < 4) {
        throw Error(ErrorCode::kBadArgument,
                    fmt::format("--vocab-size: must be >= 4, got {}", gen_vocab));
      }
      if (gen_order < 1) {
        throw Error(ErrorCode::kBadArgument, fmt::format("--order: must be >= 1, got {}", gen_order));
      }
      if (!(gen_concentration > 0.0)) {
        throw Error(ErrorCode::kBadArgument,
                    fmt::format("--concentration: must be > 0, got {}", gen_concentration));
      }
      save_model(random_model(gen_vocab, gen_order, gen_concentration, gen_seed, !gen_no_eos),
                 gen_out);
      return 0;
    }
    if (fit->parsed()) {
      if (fit_order < 1) {
        throw Error(ErrorCode::kBadArgument, fmt::format("--order: must be >= 1, got {}", fit_order));
      }
      if (!(fit_smoothing >= 0.0)) {
        throw Error(ErrorCode::kBadArgument,
                    fmt::format("--smoothing: must be >= 0, got {}", fit_smoothing));
      }
      const Vocabulary vocab = vocabulary_from_corpus(fit_corpus);
      save_model(fit_ngram(vocab, load_corpus(fit_corpus, vocab), fit_order, fit_smoothing),
                 fit_out);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace specdec
