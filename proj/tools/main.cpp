#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "run_config.hpp"
#include "sumalign/alignment.hpp"
#include "sumalign/corpus.hpp"
#include "sumalign/error.hpp"
#include "sumalign/eval.hpp"
#include "sumalign/jump.hpp"
#include "sumalign/semimarkov.hpp"
#include "sumalign/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sumalign;
using cli::KeySpec;
using cli::RunConfig;
using cli::UsageError;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Command {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
  int (*run)(const RunConfig&);
};

std::vector<KeySpec> train_keys() {
  return {
      {"pairs", "", true, "pairs JSONL file"},
      {"checkpoint", "", true, "directory for iter_<k>/ checkpoints"},
      {"jump", "syntax", false, "relative | gaussian | syntax"},
      {"iterations", "10", false, "EM iterations"},
      {"beam", "0.5", false, "beam fraction in (0, 1]"},
      {"max_doc_phrase_len", "5", false, "longest document phrase"},
      {"max_summary_phrase_len", "5", false, "longest summary phrase"},
      {"fake_singleton", "2", false, "fake count for singleton pairs"},
      {"fake_identity", "4", false, "fake count for identical pairs"},
      {"fake_stem", "3", false, "fake count for stem-identical pairs"},
      {"null_prob", "0.1", false, "initial null-jump probability"},
      {"null_smoothing", "0.5", false, "add-k smoothing of the null table"},
      {"jump_smoothing", "0.5", false, "add-k smoothing of jump counts"},
      {"tol", "0", false, "stop once an iteration gains less; 0 runs all"},
      {"resume", "false", false, "continue from the latest complete checkpoint"},
      {"parses", "", false, "bracketed parse file (needed by jump = syntax)"},
      {"graph", "", false, "hypernym graph file"},
      {"workers", "1", false, "threads for the E-step"},
  };
}

std::vector<KeySpec> align_keys() {
  return {
      {"pairs", "", true, "pairs JSONL file"},
      {"checkpoint", "", true, "checkpoint directory written by train"},
      {"out", "", true, "alignment file to write"},
      {"iteration", "", false, "checkpoint iteration; default the latest"},
      {"beam", "0.5", false, "beam fraction in (0, 1]"},
      {"parses", "", false, "bracketed parse file (needed by syntax models)"},
      {"graph", "", false, "hypernym graph file (needed when the model uses one)"},
      {"workers", "1", false, "decoding threads"},
  };
}

std::vector<KeySpec> eval_keys() {
  return {
      {"hyp", "", true, "hypothesis alignment file"},
      {"gold", "", true, "gold alignment file"},
      {"pairs", "", true, "pairs JSONL file"},
      {"out", "", true, "JSON report to write"},
      {"stoplist", "", false, "ignore-list file; default the built-in list"},
      {"oracle_null", "false", false, "project gold null words onto the hypothesis first"},
  };
}

std::vector<KeySpec> stats_keys() {
  return {
      {"pairs", "", true, "pairs JSONL file"},
      {"out", "", true, "JSON report to write"},
      {"alignments", "", false, "annotated alignment file for span statistics"},
  };
}

std::vector<KeySpec> agreement_keys() {
  return {
      {"a", "", true, "first annotator's alignment file"},
      {"b", "", true, "second annotator's alignment file"},
      {"pairs", "", true, "pairs JSONL file"},
      {"out", "", true, "JSON report to write"},
      {"stoplist", "", false, "ignore-list file; default the built-in list"},
  };
}

std::vector<KeySpec> cutpaste_keys() {
  return {
      {"pairs", "", true, "pairs JSONL file"},
      {"out", "", true, "alignment file to write"},
      {"min_block", "2", false, "shortest stem-identical block"},
  };
}

std::vector<KeySpec> model1_keys() {
  return {
      {"pairs", "", true, "pairs JSONL file"},
      {"out", "", true, "alignment file to write"},
      {"iterations", "5", false, "EM iterations"},
  };
}

std::vector<KeySpec> extract_keys() {
  return {
      {"pairs", "", true, "pairs JSONL file"},
      {"out", "", true, "extracted pairs JSONL to write"},
      {"k", "1", false, "document sentences kept per summary sentence"},
      {"parses", "", false, "parse file to cut down alongside"},
  };
}

StopList stoplist_for(const RunConfig& cfg) {
  if (const auto p = cfg.path("stoplist")) return load_stoplist(*p);
  return default_stoplist();
}

std::vector<TokenizedPair> pairs_for(const RunConfig& cfg, const StopList& stops = {}) {
  auto pairs = load_pairs(*cfg.path("pairs"), stops);
  if (cfg.knows("parses") && cfg.has("parses")) attach_all_parses(pairs, load_parse_file(*cfg.path("parses")));
  return pairs;
}

std::shared_ptr<const HypernymGraph> graph_for(const RunConfig& cfg) {
  if (!cfg.has("graph")) return nullptr;
  return std::make_shared<HypernymGraph>(load_hypernym_graph(*cfg.path("graph")));
}

void require_parses(const RunConfig& cfg, const std::vector<TokenizedPair>& pairs) {
  if (!cfg.has("parses")) throw DataError("jump = syntax needs a parse file: set 'parses'");
  for (const auto& p : pairs)
    if (!p.doc_parses) throw DataError("parse file '" + cfg.str("parses") + "' has no parses for pair '" + p.id + "'");
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  out << text;
}

fs::path echo_path(const fs::path& out) { return fs::path(out.string() + ".config"); }

void write_alignment_file(const fs::path& file, const AlignmentCorpus& corpus) {
  std::ostringstream ss;
  write_alignments(ss, corpus);
  write_text(file, ss.str());
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  try {
    tc.jump_kind = parse_jump_kind(cfg.str("jump"));
  } catch (const std::exception&) {
    throw UsageError("unknown jump kind '" + cfg.str("jump") + "'");
  }
  tc.iterations = cfg.integer("iterations");
  tc.beam_fraction = cfg.real("beam");
  tc.max_doc_phrase_len = cfg.integer("max_doc_phrase_len");
  tc.max_summary_phrase_len = cfg.integer("max_summary_phrase_len");
  tc.prior = {cfg.real("fake_singleton"), cfg.real("fake_identity"), cfg.real("fake_stem")};
  tc.initial_null_prob = cfg.real("null_prob");
  tc.null_smoothing = cfg.real("null_smoothing");
  tc.jump_options.smoothing = cfg.real("jump_smoothing");
  tc.convergence_tol = cfg.real("tol");
  tc.resume = cfg.boolean("resume");
  tc.workers = cfg.integer("workers");
  tc.checkpoint_dir = *cfg.path("checkpoint");
  try {
    tc.validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  if (tc.null_smoothing < 0 || tc.jump_options.smoothing < 0) throw UsageError("smoothing must be nonnegative");
  return tc;
}

int cmd_train(const RunConfig& cfg) {
  const auto tc = train_config(cfg);
  const auto pairs = pairs_for(cfg);
  if (tc.jump_kind == JumpKind::Syntax) require_parses(cfg, pairs);
  const auto graph = graph_for(cfg);
  fs::create_directories(tc.checkpoint_dir);
  cfg.write_echo(tc.checkpoint_dir / "config.txt");
  const auto [models, report] = em_train(pairs, tc, graph);
  for (const auto& r : report.iterations)
    std::cout << "iter " << r.iteration << "  objective " << std::setprecision(12) << r.objective << "  loglik "
              << r.loglik << "  unalignable " << r.unalignable << '\n';
  for (const auto& id : report.unalignable_ids) std::cerr << "warning: pair '" << id << "' is unalignable\n";
  std::cout << "checkpoints in " << tc.checkpoint_dir.string() << '\n';
  return 0;
}

// Viterbi per pair, striped over workers; output order is the sorted pair id
// order of AlignmentCorpus, so worker count never shows in the bytes.
AlignmentCorpus decode_all(const std::vector<TokenizedPair>& pairs, const Models& models, double beam, int workers) {
  const int L = models.rewrite.options().max_doc_phrase_len;
  std::vector<std::optional<AlignmentSet>> results(pairs.size());
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      for (std::size_t i = static_cast<std::size_t>(w); i < pairs.size(); i += static_cast<std::size_t>(workers)) {
        const auto geo = models.jump.geometry(pairs[i], L);
        const auto scores = score_pair(pairs[i], models.jump, geo, models.rewrite);
        try {
          results[i] = viterbi_decode(pairs[i], scores, beam).first;
        } catch (const UnalignableError&) {
        }
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  AlignmentCorpus out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (results[i])
      out.pairs[pairs[i].id] = std::move(*results[i]);
    else
      out.unalignable.push_back(pairs[i].id);
  }
  std::sort(out.unalignable.begin(), out.unalignable.end());
  return out;
}

int cmd_align(const RunConfig& cfg) {
  const double beam = cfg.real("beam");
  const int workers = cfg.integer("workers");
  if (!(beam > 0.0 && beam <= 1.0)) throw UsageError("beam must lie in (0, 1]");
  if (workers < 1) throw UsageError("workers must be at least 1");
  const auto dir = *cfg.path("checkpoint");
  std::optional<int> k;
  if (cfg.has("iteration")) {
    k = cfg.integer("iteration");
  } else {
    k = latest_checkpoint(dir);
    if (!k) throw DataError("no complete checkpoint under '" + dir.string() + "'");
  }
  const auto iter_dir = dir / ("iter_" + std::to_string(*k));
  if (!fs::exists(iter_dir / "report.json")) throw DataError("checkpoint '" + iter_dir.string() + "' is incomplete");
  const auto graph = graph_for(cfg);
  const auto models = load_models(iter_dir, graph);
  // The train echo records whether a graph shaped the hypernym normalisers.
  if (!graph && fs::exists(dir / "config.txt")) {
    const auto trained = cli::load_config_file(dir / "config.txt");
    const auto it = trained.find("graph");
    if (it != trained.end() && !it->second.empty())
      throw DataError("checkpoint was trained with hypernym graph '" + it->second + "': set 'graph'");
  }
  const auto pairs = pairs_for(cfg);
  if (models.jump.kind() == JumpKind::Syntax) require_parses(cfg, pairs);
  const auto corpus = decode_all(pairs, models, beam, workers);
  for (const auto& id : corpus.unalignable) std::cerr << "warning: pair '" << id << "' is unalignable; no spans written\n";
  const auto out = *cfg.path("out");
  write_alignment_file(out, corpus);
  cfg.write_echo(echo_path(out));
  std::cout << "aligned " << corpus.pairs.size() << " pairs from " << iter_dir.string() << '\n';
  return 0;
}

void print_section(const char* name, const MetricSection& s) {
  std::cout << std::fixed << std::setprecision(4) << name << "  SoftP " << s.soft_precision << "  P "
            << s.strict_precision << "  R " << s.recall << "  SoftF " << s.soft_fscore << '\n';
}

int cmd_eval(const RunConfig& cfg) {
  const auto stops = stoplist_for(cfg);
  const auto pairs = pairs_for(cfg, stops);
  const auto gold = load_alignments(*cfg.path("gold"));
  auto hyp = load_alignments(*cfg.path("hyp"));
  if (cfg.boolean("oracle_null")) hyp = oracle_null_project(hyp, gold);
  const auto report = evaluate(hyp, gold, pairs, stops);
  print_section("all words", report.all_words);
  print_section("non-stop ", report.non_stop);
  for (const auto& f : report.flags) std::cout << "flag: " << f << '\n';
  const auto out = *cfg.path("out");
  write_text(out, eval_report_json(report));
  cfg.write_echo(echo_path(out));
  return 0;
}

json side_json(const SideStats& s) {
  return {{"sentences", s.sentences},
          {"words", s.words},
          {"unique_words", s.unique_words},
          {"sentences_per_doc", s.sentences_per_doc},
          {"words_per_doc", s.words_per_doc},
          {"words_per_sentence", s.words_per_sentence}};
}

int cmd_stats(const RunConfig& cfg) {
  const auto pairs = pairs_for(cfg);
  const auto st = corpus_stats(pairs);
  json j;
  j["pairs"] = st.num_pairs;
  j["summary"] = side_json(st.summary);
  j["document"] = side_json(st.doc);
  j["unique_words_combined"] = st.unique_words_combined;
  j["compression_rate"] = st.compression_rate;
  std::cout << std::fixed << std::setprecision(2) << "pairs " << st.num_pairs << "\n"
            << "                summary   document\n"
            << "sentences/doc   " << std::setw(7) << st.summary.sentences_per_doc << "   " << std::setw(8)
            << st.doc.sentences_per_doc << '\n'
            << "words/doc       " << std::setw(7) << st.summary.words_per_doc << "   " << std::setw(8)
            << st.doc.words_per_doc << '\n'
            << "words/sentence  " << std::setw(7) << st.summary.words_per_sentence << "   " << std::setw(8)
            << st.doc.words_per_sentence << '\n'
            << "unique words    " << std::setw(7) << st.summary.unique_words << "   " << std::setw(8)
            << st.doc.unique_words << '\n'
            << "compression " << std::setprecision(4) << st.compression_rate << '\n';
  if (cfg.has("alignments")) {
    const auto al = load_alignments(*cfg.path("alignments"));
    j["alignments"] = json::parse(alignment_stats_json(alignment_stats(al, pairs)));
  }
  const auto out = *cfg.path("out");
  write_text(out, j.dump(2) + "\n");
  cfg.write_echo(echo_path(out));
  return 0;
}

void print_kappa(const char* name, const std::optional<double>& k) {
  std::cout << name;
  if (k)
    std::cout << std::fixed << std::setprecision(4) << *k << '\n';
  else
    std::cout << "undefined\n";
}

int cmd_agreement(const RunConfig& cfg) {
  const auto stops = stoplist_for(cfg);
  const auto pairs = pairs_for(cfg, stops);
  const auto rep = agreement(load_alignments(*cfg.path("a")), load_alignments(*cfg.path("b")), pairs, stops);
  print_kappa("kappa sure, all words          ", rep.sure_all);
  print_kappa("kappa sure, without stop words ", rep.sure_non_stop);
  print_kappa("kappa possible, all words      ", rep.possible_all);
  print_kappa("kappa possible, without stop   ", rep.possible_non_stop);
  const auto out = *cfg.path("out");
  write_text(out, agreement_json(rep));
  cfg.write_echo(echo_path(out));
  return 0;
}

int cmd_cutpaste(const RunConfig& cfg) {
  const int n = cfg.integer("min_block");
  if (n < 1) throw UsageError("min_block must be at least 1");
  AlignmentCorpus corpus;
  for (const auto& p : pairs_for(cfg)) corpus.pairs[p.id] = cutpaste_align(p, n);
  const auto out = *cfg.path("out");
  write_alignment_file(out, corpus);
  cfg.write_echo(echo_path(out));
  return 0;
}

int cmd_model1(const RunConfig& cfg) {
  const int iters = cfg.integer("iterations");
  if (iters < 1) throw UsageError("iterations must be at least 1");
  const auto pairs = pairs_for(cfg);
  AlignmentCorpus corpus;
  for (auto& a : model1_align(pairs, iters)) corpus.pairs[a.pair_id] = std::move(a);
  const auto out = *cfg.path("out");
  write_alignment_file(out, corpus);
  cfg.write_echo(echo_path(out));
  return 0;
}

int cmd_extract(const RunConfig& cfg) {
  const int k = cfg.integer("k");
  if (k < 1) throw UsageError("k must be at least 1");
  std::vector<TokenizedPair> out_pairs;
  std::ostringstream parses;
  for (const auto& p : pairs_for(cfg)) {
    out_pairs.push_back(select_extract(p, static_cast<std::size_t>(k)));
    if (out_pairs.back().doc_parses) {
      parses << "#pair " << p.id << '\n';
      for (const auto& t : *out_pairs.back().doc_parses) parses << to_bracketed(t) << '\n';
    }
  }
  const auto out = *cfg.path("out");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_pairs(out, out_pairs, true);
  if (cfg.has("parses")) write_text(fs::path(out.string() + ".parses"), parses.str());
  cfg.write_echo(echo_path(out));
  std::cerr << "note: wrote approximate extracts (sentence selection by stem overlap)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Command> commands = {
      {"train", "Train the semi-HMM with MAP-EM, checkpointing every iteration", train_keys(), cmd_train},
      {"align", "Viterbi-decode pairs with a trained checkpoint", align_keys(), cmd_align},
      {"eval", "Score a hypothesis alignment against gold", eval_keys(), cmd_eval},
      {"stats", "Corpus statistics", stats_keys(), cmd_stats},
      {"agreement", "Kappa agreement between two annotations", agreement_keys(), cmd_agreement},
      {"baseline-cutpaste", "Greedy stem-identical block baseline", cutpaste_keys(), cmd_cutpaste},
      {"baseline-model1", "Word-level Model 1 baseline", model1_keys(), cmd_model1},
      {"extract", "Reduce documents to extracts", extract_keys(), cmd_extract},
  };

  CLI::App app{"Document/summary alignment with a semi-Markov HMM"};
  app.require_subcommand(1);
  std::vector<std::map<std::string, std::string>> flag_values(commands.size());
  std::vector<std::string> config_files(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    auto* sub = app.add_subcommand(commands[c].name, commands[c].help);
    sub->add_option("--config", config_files[c], "flat key = value config file");
    for (const auto& k : commands[c].keys) {
      auto* opt = sub->add_option("--" + k.key, flag_values[c][k.key], k.help);
      if (!k.default_value.empty()) opt->description(k.help + " (default " + k.default_value + ")");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (std::size_t c = 0; c < commands.size(); ++c) {
    if (!subs[c]->parsed()) continue;
    try {
      RunConfig cfg(commands[c].name, commands[c].keys);
      for (const auto& k : commands[c].keys)
        if (subs[c]->count("--" + k.key) > 0) cfg.set_flag(k.key, flag_values[c][k.key]);
      if (!config_files[c].empty()) cfg.merge_file(cli::load_config_file(config_files[c]), config_files[c]);
      cfg.check_required();
      return commands[c].run(cfg);
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const DataError& e) {
      std::cerr << "data error: " << e.what() << '\n';
      return kExitData;
    } catch (const UnalignableError& e) {
      std::cerr << "data error: " << e.what() << '\n';
      return kExitData;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "data error: " << e.what() << '\n';
      return kExitData;
    } catch (const NumericalError& e) {
      std::cerr << "numerical error: " << e.what() << '\n';
      return kExitNumerical;
    } catch (const std::exception& e) {
      std::cerr << "numerical error: " << e.what() << '\n';
      return kExitNumerical;
    }
  }
  return kExitUsage;
}
