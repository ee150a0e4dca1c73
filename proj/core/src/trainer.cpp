#include "sumalign/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sumalign/error.hpp"
#include "sumalign/logmath.hpp"
#include "sumalign/semimarkov.hpp"

namespace sumalign {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (iterations < 1) throw DataError("iterations must be at least 1");
  if (max_doc_phrase_len < 1 || max_summary_phrase_len < 1) throw DataError("phrase length bounds must be at least 1");
  if (!(beam_fraction > 0.0 && beam_fraction <= 1.0)) throw DataError("beam_fraction must lie in (0, 1]");
  if (workers < 1) throw DataError("workers must be at least 1");
  if (!(initial_null_prob > 0.0 && initial_null_prob < 1.0)) throw DataError("initial null probability must lie in (0, 1)");
  if (convergence_tol < 0.0) throw DataError("convergence_tol must be nonnegative");
  if (prior.singleton_fake < 0.0 || prior.lexical_identity_fake < 0.0 || prior.stem_identity_fake < 0.0)
    throw DataError("fake counts must be nonnegative");
}

RewriteOptions rewrite_options(const TrainConfig& config) {
  RewriteOptions o;
  o.max_doc_phrase_len = config.max_doc_phrase_len;
  o.max_summary_phrase_len = config.max_summary_phrase_len;
  o.prior = config.prior;
  o.null_smoothing = config.null_smoothing;
  return o;
}

Models init_params(std::span<const TokenizedPair> corpus, const TrainConfig& config,
                   std::shared_ptr<const HypernymGraph> graph) {
  config.validate();
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  std::size_t max_doc = 0;
  for (const auto& p : corpus) max_doc = std::max(max_doc, p.doc.size());
  const int window = static_cast<int>(max_doc) + 1;
  Models m;
  switch (config.jump_kind) {
    case JumpKind::Relative:
      m.jump = JumpModel::relative(window, config.initial_null_prob);
      break;
    case JumpKind::Gaussian:
      // A very wide bell is the closest a Gaussian gets to uniform.
      m.jump = JumpModel::gaussian(1.0, static_cast<double>(window) * window, config.initial_null_prob);
      break;
    case JumpKind::Syntax:
      for (const auto& p : corpus) {
        if (!p.doc_parses) throw DataError("syntax jumps need parses; pair '" + p.id + "' has none");
      }
      m.jump = JumpModel::syntax(JumpModel::tag_inventory(corpus), config.initial_null_prob);
      break;
  }
  m.rewrite = RewriteModel::initialize(corpus, rewrite_options(config), std::move(graph));
  return m;
}

namespace {

std::vector<std::size_t> canonical_order(std::span<const TokenizedPair> corpus) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });
  return order;
}

PairEStep run_pair(const TokenizedPair& pair, const JumpGeometry& geometry, const Models& models, double beam,
                   bool with_counts) {
  PairEStep out;
  PairRewriteTable table;
  const PairScores sc = score_pair(pair, models.jump, geometry, models.rewrite, &table);
  Trellis tr = forward(sc, beam);
  if (!tr.alignable()) return out;
  out.alignable = true;
  out.loglik = tr.total_loglik;
  if (!with_counts) return out;
  backward(sc, tr);
  ExpectedCounts ec = expected_counts(sc, tr, geometry, models.rewrite, table);
  out.segments = ec.segments;
  out.jump = std::move(ec.jump);
  out.rewrite = std::move(ec.rewrite);
  return out;
}

template <typename F>
void parallel_for(std::size_t count, int workers, F&& body) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), std::max<std::size_t>(count, 1));
  if (w <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t id = 0; id < w; ++id) {
    threads.emplace_back([&, id] {
      try {
        // Static striping: each worker owns a fixed set of slots.
        for (std::size_t k = id; k < count; k += w) body(k);
      } catch (...) {
        errors[id] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

EStepResult e_step(std::span<const TokenizedPair> corpus, std::span<const JumpGeometry> geometries,
                   const Models& models, double beam_fraction, int workers, bool with_counts) {
  if (geometries.size() != corpus.size()) throw NumericalError("one jump geometry per pair is required");
  const auto order = canonical_order(corpus);
  std::vector<PairEStep> slots(corpus.size());
  parallel_for(order.size(), workers, [&](std::size_t k) {
    const std::size_t idx = order[k];
    slots[k] = run_pair(corpus[idx], geometries[idx], models, beam_fraction, with_counts);
  });
  EStepResult res;
  for (std::size_t k = 0; k < order.size(); ++k) {
    PairEStep& s = slots[k];
    if (!s.alignable) {
      res.unalignable_ids.push_back(corpus[order[k]].id);
      continue;
    }
    ++res.alignable;
    res.loglik += s.loglik;
    res.segments += s.segments;
    if (with_counts) {
      res.jump.push_back(std::move(s.jump));
      res.rewrite.add(s.rewrite);
    }
  }
  return res;
}

double log_prior(const Models& models, const TrainConfig& config) {
  return models.rewrite.log_prior() + jump_log_prior(models.jump, config.jump_options);
}

namespace {

std::vector<JumpGeometry> geometries_for(std::span<const TokenizedPair> corpus, const JumpModel& jump, int max_len) {
  std::vector<JumpGeometry> g;
  g.reserve(corpus.size());
  for (const auto& p : corpus) g.push_back(jump.geometry(p, max_len));
  return g;
}

IterationRecord record_for(int k, const EStepResult& e, const Models& models, const TrainConfig& config) {
  IterationRecord r;
  r.iteration = k;
  r.loglik = e.loglik;
  r.log_prior = log_prior(models, config);
  r.objective = r.loglik + r.log_prior;
  r.alignable = e.alignable;
  r.unalignable = e.unalignable_ids.size();
  r.expected_segments = e.segments;
  return r;
}

}  // namespace

double map_objective(std::span<const TokenizedPair> corpus, const Models& models, const TrainConfig& config) {
  const auto geos = geometries_for(corpus, models.jump, config.max_doc_phrase_len);
  const EStepResult e = e_step(corpus, geos, models, config.beam_fraction, config.workers, false);
  return e.loglik + log_prior(models, config);
}

std::pair<Models, TrainReport> em_train(std::span<const TokenizedPair> corpus, const TrainConfig& config,
                                        std::shared_ptr<const HypernymGraph> graph) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  TrainReport report;
  Models models;
  int first = 0;
  if (config.resume && !config.checkpoint_dir.empty()) {
    if (const auto k = latest_checkpoint(config.checkpoint_dir)) {
      const fs::path dir = config.checkpoint_dir / ("iter_" + std::to_string(*k));
      models = load_models(dir, graph);
      report = load_report(dir);
      // The record for iteration k is recomputed by the E-step below.
      while (!report.iterations.empty() && report.iterations.back().iteration >= *k) report.iterations.pop_back();
      report.resumed_from = *k;
      first = *k;
    }
  }
  if (report.resumed_from < 0) models = init_params(corpus, config, graph);
  if (models.jump.kind() != config.jump_kind) throw DataError("checkpoint jump kind differs from the configuration");

  const auto geos = geometries_for(corpus, models.jump, config.max_doc_phrase_len);
  for (int k = first; k <= config.iterations; ++k) {
    const bool last = k == config.iterations;
    EStepResult e = e_step(corpus, geos, models, config.beam_fraction, config.workers, !last);
    report.iterations.push_back(record_for(k, e, models, config));
    report.unalignable_ids = e.unalignable_ids;
    if (!config.checkpoint_dir.empty()) save_checkpoint(config.checkpoint_dir / ("iter_" + std::to_string(k)), models, report, config);
    if (last) break;
    if (config.convergence_tol > 0.0 && report.iterations.size() >= 2) {
      const double gain = report.iterations.back().objective - report.iterations[report.iterations.size() - 2].objective;
      if (gain < config.convergence_tol) {
        report.converged = true;
        break;
      }
    }
    if (e.alignable == 0) throw NumericalError("every pair is unalignable under the current parameters");
    models.jump = reestimate(models.jump, e.jump, config.jump_options);
    models.rewrite.reestimate(e.rewrite);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(models), std::move(report)};
}

// ---------------------------------------------------------------- checkpoints

std::string report_json(const TrainReport& report, const TrainConfig& config) {
  json j;
  j["jump_kind"] = to_string(config.jump_kind);
  j["iterations_requested"] = config.iterations;
  j["beam_fraction"] = config.beam_fraction;
  j["max_doc_phrase_len"] = config.max_doc_phrase_len;
  j["max_summary_phrase_len"] = config.max_summary_phrase_len;
  j["prior"] = {{"singleton", config.prior.singleton_fake},
                {"lexical_identity", config.prior.lexical_identity_fake},
                {"stem_identity", config.prior.stem_identity_fake}};
  j["converged"] = report.converged;
  j["resumed_from"] = report.resumed_from;
  json iters = json::array();
  for (const auto& r : report.iterations) {
    iters.push_back({{"iteration", r.iteration},
                     {"loglik", r.loglik},
                     {"log_prior", r.log_prior},
                     {"objective", r.objective},
                     {"alignable", r.alignable},
                     {"unalignable", r.unalignable},
                     {"expected_segments", r.expected_segments}});
  }
  j["iterations"] = iters;
  j["unalignable_ids"] = report.unalignable_ids;
  return j.dump(2) + "\n";
}

void save_checkpoint(const fs::path& dir, const Models& models, const TrainReport& report, const TrainConfig& config) {
  fs::create_directories(dir);
  save_jump_model(dir / "jump.tsv", models.jump);
  models.rewrite.save(dir / "rewrite.tsv");
  // report.json goes last: its presence marks the checkpoint complete.
  const fs::path tmp = dir / "report.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << report_json(report, config);
  }
  fs::rename(tmp, dir / "report.json");
}

std::optional<int> latest_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<int> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("iter_", 0) != 0) continue;
    const std::string digits = name.substr(5);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    if (!fs::exists(entry.path() / "jump.tsv") || !fs::exists(entry.path() / "rewrite.tsv") ||
        !fs::exists(entry.path() / "report.json"))
      continue;
    const int k = std::stoi(digits);
    if (!best || k > *best) best = k;
  }
  return best;
}

Models load_models(const fs::path& iter_dir, std::shared_ptr<const HypernymGraph> graph) {
  Models m;
  m.jump = load_jump_model(iter_dir / "jump.tsv");
  m.rewrite = RewriteModel::load(iter_dir / "rewrite.tsv", std::move(graph));
  return m;
}

TrainReport load_report(const fs::path& iter_dir) {
  std::ifstream in(iter_dir / "report.json");
  if (!in) throw DataError("cannot open '" + (iter_dir / "report.json").string() + "'");
  TrainReport r;
  try {
    const json j = json::parse(in);
    r.converged = j.at("converged").get<bool>();
    for (const auto& it : j.at("iterations")) {
      IterationRecord rec;
      rec.iteration = it.at("iteration").get<int>();
      rec.loglik = it.at("loglik").get<double>();
      rec.log_prior = it.at("log_prior").get<double>();
      rec.objective = it.at("objective").get<double>();
      rec.alignable = it.at("alignable").get<std::size_t>();
      rec.unalignable = it.at("unalignable").get<std::size_t>();
      rec.expected_segments = it.at("expected_segments").get<double>();
      r.iterations.push_back(rec);
    }
    r.unalignable_ids = j.at("unalignable_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError((iter_dir / "report.json").string() + ": " + e.what());
  }
  return r;
}

}  // namespace sumalign
