#include "sumalign/rewrite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "sumalign/error.hpp"
#include "sumalign/logmath.hpp"
#include "sumalign/stemmer.hpp"

namespace sumalign {

namespace {

constexpr double kUnseenFloor = 1e-12;

using Ancestors = std::map<std::string, int>;

std::optional<int> ancestor_distance(const Ancestors& a, const Ancestors& b) {
  const Ancestors& small = a.size() <= b.size() ? a : b;
  const Ancestors& large = a.size() <= b.size() ? b : a;
  std::optional<int> best;
  for (const auto& [node, x] : small) {
    auto it = large.find(node);
    if (it == large.end()) continue;
    if (!best || x + it->second < *best) best = x + it->second;
  }
  return best;
}

std::string stem_key_of(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += stem(words[i]);
  }
  return out;
}

std::vector<std::string> slice(const Side& side, std::size_t first, std::size_t len) {
  std::vector<std::string> out;
  out.reserve(len);
  for (std::size_t k = first; k < first + len; ++k) out.push_back(side[k].surface);
  return out;
}

}  // namespace

double fake_count(const PriorSpec& prior, const std::vector<std::string>& s, const std::vector<std::string>& d) {
  double f = 0.0;
  if (s.size() == 1 && d.size() == 1) f += prior.singleton_fake;
  if (s == d) f += prior.lexical_identity_fake;
  if (s.size() == d.size() && stem_key_of(s) == stem_key_of(d)) f += prior.stem_identity_fake;
  return f;
}

std::string phrase_key(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_phrase(const std::string& key) { return tokenize(key); }

std::string wn_lemma(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += '_';
    out += to_lower(words[i]);
  }
  return out;
}

double PairRewriteTable::prob(int phrase, int t, int len) const {
  const auto& tm = terms[index(phrase, t, len)];
  return tm[0] + tm[1] + tm[2] + tm[3];
}

void RewriteCounts::add(const RewriteCounts& other) {
  for (const auto& [k, v] : other.lexical) lexical[k] += v;
  for (std::size_t k = 0; k < kSubmodels; ++k) membership[k] += other.membership[k];
  for (const auto& [k, v] : other.wn) wn[k] += v;
  for (const auto& [k, v] : other.null_emissions) null_emissions[k] += v;
  emissions += other.emissions;
}

// ---------------------------------------------------------------- construction

RewriteModel RewriteModel::initialize(std::span<const TokenizedPair> pairs, const RewriteOptions& opts,
                                      std::shared_ptr<const HypernymGraph> graph) {
  if (pairs.empty()) throw DataError("cannot initialise a rewrite model from an empty corpus");
  if (opts.max_doc_phrase_len < 1 || opts.max_summary_phrase_len < 1)
    throw DataError("phrase length bounds must be at least 1");
  RewriteModel m;
  m.opts_ = opts;
  m.lambdas_ = opts.lambdas;
  m.set_eta(opts.eta);
  m.graph_ = std::move(graph);

  std::set<std::string> vocab, sum_vocab;
  std::unordered_set<std::string> key_set, summary_keys;
  const auto L = static_cast<std::size_t>(opts.max_doc_phrase_len);
  const auto l = static_cast<std::size_t>(opts.max_summary_phrase_len);
  for (const auto& p : pairs) {
    for (const auto& t : p.doc.tokens()) vocab.insert(t.surface);
    for (const auto& t : p.summary.tokens()) {
      vocab.insert(t.surface);
      sum_vocab.insert(t.surface);
    }
    for (std::size_t i = 0; i < p.doc.size(); ++i)
      for (std::size_t len = 1; len <= L && i + len <= p.doc.size(); ++len) key_set.insert(phrase_key(slice(p.doc, i, len)));
    for (std::size_t t = 0; t < p.summary.size(); ++t)
      for (std::size_t len = 1; len <= l && t + len <= p.summary.size(); ++len) {
        auto k = phrase_key(slice(p.summary, t, len));
        key_set.insert(k);
        summary_keys.insert(std::move(k));
      }
  }
  m.vocab_.assign(vocab.begin(), vocab.end());
  for (const auto& w : m.vocab_) ++m.stem_counts_[stem(w)];
  m.null_vocab_.assign(sum_vocab.begin(), sum_vocab.end());
  for (const auto& w : m.null_vocab_) m.null_table_[w] = 1.0 / static_cast<double>(m.null_vocab_.size());

  std::vector<std::string> keys(key_set.begin(), key_set.end());
  std::sort(keys.begin(), keys.end());
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < keys.size(); ++i) ids.emplace(keys[i], static_cast<int>(i));

  std::vector<std::uint64_t> cooc;
  for (const auto& p : pairs) {
    std::vector<int> d_ids, s_ids;
    for (std::size_t i = 0; i < p.doc.size(); ++i)
      for (std::size_t len = 1; len <= L && i + len <= p.doc.size(); ++len)
        d_ids.push_back(ids.at(phrase_key(slice(p.doc, i, len))));
    for (std::size_t t = 0; t < p.summary.size(); ++t)
      for (std::size_t len = 1; len <= l && t + len <= p.summary.size(); ++len)
        s_ids.push_back(ids.at(phrase_key(slice(p.summary, t, len))));
    std::sort(d_ids.begin(), d_ids.end());
    d_ids.erase(std::unique(d_ids.begin(), d_ids.end()), d_ids.end());
    std::sort(s_ids.begin(), s_ids.end());
    s_ids.erase(std::unique(s_ids.begin(), s_ids.end()), s_ids.end());
    for (int d : d_ids)
      for (int s : s_ids) cooc.push_back(entry_key(d, s));
  }
  m.build_index(std::move(keys), std::move(cooc));

  for (const auto& [b, e] : m.rows_) {
    double z = 0.0;
    for (std::size_t k = b; k < e; ++k) z += 1.0 + m.entries_[k].fake;
    for (std::size_t k = b; k < e; ++k) m.entries_[k].prob = (1.0 + m.entries_[k].fake) / z;
  }

  std::vector<std::string> support;
  for (const auto& k : summary_keys) support.push_back(k);
  std::sort(support.begin(), support.end());
  m.wn_support_ = std::move(support);
  m.build_norms();
  return m;
}

RewriteModel::PhraseMeta RewriteModel::make_meta(const std::vector<std::string>& words) const {
  PhraseMeta meta;
  meta.length = static_cast<int>(words.size());
  meta.stem_key = stem_key_of(words);
  meta.stem_norm = stem_norm_words(words);
  if (graph_) meta.synset = graph_->first_sense(wn_lemma(words));
  return meta;
}

double RewriteModel::stem_norm_words(const std::vector<std::string>& words) const {
  double z = 1.0;
  for (const auto& w : words) {
    auto it = stem_counts_.find(stem(w));
    z *= it == stem_counts_.end() ? 1.0 : static_cast<double>(std::max(1, it->second));
  }
  return z;
}

void RewriteModel::build_index(std::vector<std::string> keys, std::vector<std::uint64_t> pairs) {
  keys_ = std::move(keys);
  key_index_.clear();
  for (std::size_t i = 0; i < keys_.size(); ++i) key_index_.emplace(keys_[i], static_cast<int>(i));
  meta_.clear();
  meta_.reserve(keys_.size());
  for (const auto& k : keys_) meta_.push_back(make_meta(split_phrase(k)));

  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  entries_.clear();
  entries_.reserve(pairs.size());
  entry_index_.clear();
  entry_index_.reserve(pairs.size());
  rows_.clear();
  for (std::uint64_t key : pairs) {
    const int d = static_cast<int>(key >> 32);
    const int s = static_cast<int>(key & 0xffffffffu);
    const PhraseMeta& md = meta_[static_cast<std::size_t>(d)];
    const PhraseMeta& ms = meta_[static_cast<std::size_t>(s)];
    double f = 0.0;
    if (md.length == 1 && ms.length == 1) f += opts_.prior.singleton_fake;
    if (d == s) f += opts_.prior.lexical_identity_fake;
    if (md.length == ms.length && md.stem_key == ms.stem_key) f += opts_.prior.stem_identity_fake;
    if (rows_.empty() || entries_[rows_.back().first].d != d) rows_.emplace_back(entries_.size(), entries_.size());
    entry_index_.emplace(key, entries_.size());
    entries_.push_back({d, s, 0.0, f});
    rows_.back().second = entries_.size();
  }
}

void RewriteModel::build_norms() {
  wn_support_synsets_.clear();
  wn_hist_.clear();
  if (!graph_) return;
  std::vector<std::string> kept;
  for (const auto& k : wn_support_) {
    auto syn = graph_->first_sense(wn_lemma(split_phrase(k)));
    if (syn) {
      kept.push_back(k);
      wn_support_synsets_.push_back(syn);
    }
  }
  wn_support_ = std::move(kept);
  std::set<int> doc_ids;
  for (const auto& [b, e] : rows_) doc_ids.insert(entries_[b].d);
  std::unordered_map<std::string, std::vector<std::pair<int, double>>> by_synset;
  for (int d : doc_ids) {
    const auto& syn = meta_[static_cast<std::size_t>(d)].synset;
    if (!syn) continue;
    auto it = by_synset.find(*syn);
    if (it == by_synset.end()) it = by_synset.emplace(*syn, wn_hist_for(*syn)).first;
    wn_hist_.emplace(d, it->second);
  }
}

std::vector<std::pair<int, double>> RewriteModel::wn_hist_for(const std::string& synset) const {
  std::map<int, double> hist;
  const Ancestors mine = graph_->ancestors(synset);
  std::unordered_map<std::string, std::optional<int>> seen;
  for (const auto& syn : wn_support_synsets_) {
    auto it = seen.find(*syn);
    if (it == seen.end()) it = seen.emplace(*syn, ancestor_distance(mine, graph_->ancestors(*syn))).first;
    if (it->second) hist[*it->second] += 1.0;
  }
  return {hist.begin(), hist.end()};
}

std::optional<int> RewriteModel::distance_between(const std::string& a, const std::string& b) const {
  if (!graph_) return std::nullopt;
  return graph_->synset_distance(a, b);
}

void RewriteModel::set_eta(double eta) {
  if (!(eta > 0.0)) throw DataError("hypernym decay eta must be positive");
  eta_ = eta;
}

void RewriteModel::set_graph(std::shared_ptr<const HypernymGraph> graph) {
  graph_ = std::move(graph);
  for (std::size_t i = 0; i < keys_.size(); ++i)
    meta_[i].synset = graph_ ? graph_->first_sense(wn_lemma(split_phrase(keys_[i]))) : std::nullopt;
  build_norms();
}

// ---------------------------------------------------------------- submodels

double RewriteModel::id_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const {
  return s == d ? 1.0 : 0.0;
}

double RewriteModel::stem_norm(const std::vector<std::string>& d) const { return stem_norm_words(d); }

double RewriteModel::stem_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const {
  if (s.size() != d.size()) return 0.0;
  if (stem_key_of(s) != stem_key_of(d)) return 0.0;
  const double z = stem_norm_words(d);
  if (!(z > 0.0)) throw NumericalError("stem normaliser is zero for a matching phrase");
  return 1.0 / z;
}

std::optional<int> RewriteModel::wn_distance(const std::vector<std::string>& s, const std::vector<std::string>& d) const {
  if (!graph_) return std::nullopt;
  const auto a = graph_->first_sense(wn_lemma(s));
  const auto b = graph_->first_sense(wn_lemma(d));
  if (!a || !b) return std::nullopt;
  return distance_between(*a, *b);
}

double RewriteModel::wn_norm_for(int id, const std::optional<std::string>& synset, const std::string& key,
                                 double eta) const {
  const double lz = log_wn_norm_for(id, synset, key, eta);
  return lz == kNegInf ? 0.0 : std::exp(lz);
}

double RewriteModel::log_wn_norm_for(int id, const std::optional<std::string>& synset, const std::string& key,
                                     double eta) const {
  (void)key;
  if (!synset || !graph_) return kNegInf;
  const std::vector<std::pair<int, double>>* hist = nullptr;
  std::vector<std::pair<int, double>> local;
  if (id >= 0) {
    auto it = wn_hist_.find(id);
    if (it != wn_hist_.end()) hist = &it->second;
  }
  if (!hist) {
    local = wn_hist_for(*synset);
    hist = &local;
  }
  if (hist->empty()) return kNegInf;
  // Histograms are sorted by distance, so the first bucket dominates. log1p
  // keeps the tail visible when it is far below one ulp of the head.
  const auto& [d0, c0] = hist->front();
  double tail = 0.0;
  for (std::size_t k = 1; k < hist->size(); ++k)
    tail += (*hist)[k].second / c0 * std::exp(-eta * ((*hist)[k].first - d0));
  return std::log(c0) - eta * d0 + std::log1p(tail);
}

double RewriteModel::wn_norm(const std::vector<std::string>& d) const {
  const std::string key = phrase_key(d);
  const std::optional<std::string> syn = graph_ ? graph_->first_sense(wn_lemma(d)) : std::nullopt;
  return wn_norm_for(phrase_id(key), syn, key, eta_);
}

double RewriteModel::wn_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const {
  const auto dist = wn_distance(s, d);
  if (!dist) return 0.0;
  const double z = wn_norm(d);
  if (!(z > 0.0)) return 0.0;
  return std::exp(-eta_ * *dist) / z;
}

double RewriteModel::lexical_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const {
  auto v = ttable_entry(phrase_key(d), phrase_key(s));
  return v ? *v : kUnseenFloor;
}

double RewriteModel::null_prob(const std::string& word) const {
  auto it = null_table_.find(word);
  return it == null_table_.end() ? kUnseenFloor : it->second;
}

std::array<double, kSubmodels> RewriteModel::terms(const std::string& s_key, const PhraseMeta& s, int s_id,
                                                   const std::string& d_key, const PhraseMeta& d, int d_id,
                                                   double d_wn_norm, int* dist_out) const {
  std::array<double, kSubmodels> out{};
  if (s_key == d_key) out[kIdentity] = lambdas_[kIdentity];
  if (s.length == d.length && s.stem_key == d.stem_key) out[kStem] = lambdas_[kStem] / d.stem_norm;
  if (dist_out) *dist_out = -1;
  if (lambdas_[kWordNet] > 0.0 && s.synset && d.synset && d_wn_norm > 0.0) {
    const auto dist = distance_between(*s.synset, *d.synset);
    if (dist) {
      out[kWordNet] = lambdas_[kWordNet] * std::exp(-eta_ * *dist) / d_wn_norm;
      if (dist_out) *dist_out = *dist;
    }
  }
  double t = kUnseenFloor;
  if (s_id >= 0 && d_id >= 0) {
    auto it = entry_index_.find(entry_key(d_id, s_id));
    if (it != entry_index_.end()) t = entries_[it->second].prob;
  }
  out[kLexical] = lambdas_[kLexical] * t;
  return out;
}

double RewriteModel::rewrite_logprob(const std::vector<std::string>& s, const std::vector<std::string>& d) const {
  if (std::find(s.begin(), s.end(), kOmega) != s.end())
    throw DataError("the end-of-summary marker is never scored by the rewrite model");
  if (s.empty() || d.empty()) throw DataError("rewrite_logprob needs non-empty phrases");
  const std::string sk = phrase_key(s), dk = phrase_key(d);
  const int si = phrase_id(sk), di = phrase_id(dk);
  const PhraseMeta ms = si >= 0 ? meta_[static_cast<std::size_t>(si)] : make_meta(s);
  const PhraseMeta md = di >= 0 ? meta_[static_cast<std::size_t>(di)] : make_meta(d);
  const double z = wn_norm_for(di, md.synset, dk, eta_);
  const auto tm = terms(sk, ms, si, dk, md, di, z, nullptr);
  return safe_log(tm[0] + tm[1] + tm[2] + tm[3]);
}

double RewriteModel::null_logprob(const std::vector<std::string>& s) const {
  if (s.size() != 1) throw DataError("null states emit exactly one word");
  if (s[0] == kOmega) throw DataError("the end-of-summary marker is never scored by the rewrite model");
  return safe_log(null_prob(s[0]));
}

// ---------------------------------------------------------------- per-pair scoring

PairRewriteTable RewriteModel::score_pair(const TokenizedPair& pair, const StateSpace& ss) const {
  PairRewriteTable tab;
  tab.phrases = ss.phrase_count();
  tab.summary_len = static_cast<int>(pair.summary.size());
  tab.max_len = opts_.max_summary_phrase_len;
  const int N = tab.summary_len, l = tab.max_len;
  const std::size_t cells = static_cast<std::size_t>(tab.phrases) * static_cast<std::size_t>(N) * static_cast<std::size_t>(l);
  tab.terms.assign(cells, {0.0, 0.0, 0.0, 0.0});
  tab.wn_dist.assign(cells, -1);

  struct SpanInfo {
    std::string key;
    int id;
    PhraseMeta meta;
  };
  std::vector<SpanInfo> spans(static_cast<std::size_t>(N) * static_cast<std::size_t>(l));
  tab.sum_ids.assign(spans.size(), -1);
  for (int t = 0; t < N; ++t) {
    for (int len = 1; len <= l && t + len <= N; ++len) {
      auto words = slice(pair.summary, static_cast<std::size_t>(t), static_cast<std::size_t>(len));
      SpanInfo& sp = spans[static_cast<std::size_t>(t) * static_cast<std::size_t>(l) + static_cast<std::size_t>(len - 1)];
      sp.key = phrase_key(words);
      sp.id = phrase_id(sp.key);
      sp.meta = sp.id >= 0 ? meta_[static_cast<std::size_t>(sp.id)] : make_meta(words);
      tab.sum_ids[static_cast<std::size_t>(t) * static_cast<std::size_t>(l) + static_cast<std::size_t>(len - 1)] = sp.id;
    }
  }
  tab.doc_ids.assign(static_cast<std::size_t>(tab.phrases), -1);
  for (int k = 0; k < tab.phrases; ++k) {
    const State& st = ss.state(k + 1);
    auto words = slice(pair.doc, static_cast<std::size_t>(st.i - 1), static_cast<std::size_t>(st.i_end - st.i + 1));
    const std::string dk = phrase_key(words);
    const int di = phrase_id(dk);
    tab.doc_ids[static_cast<std::size_t>(k)] = di;
    const PhraseMeta md = di >= 0 ? meta_[static_cast<std::size_t>(di)] : make_meta(words);
    const double z = lambdas_[kWordNet] > 0.0 ? wn_norm_for(di, md.synset, dk, eta_) : 0.0;
    for (int t = 0; t < N; ++t) {
      for (int len = 1; len <= l && t + len <= N; ++len) {
        const SpanInfo& sp = spans[static_cast<std::size_t>(t) * static_cast<std::size_t>(l) + static_cast<std::size_t>(len - 1)];
        const std::size_t idx = tab.index(k, t, len);
        tab.terms[idx] = terms(sp.key, sp.meta, sp.id, dk, md, di, z, &tab.wn_dist[idx]);
      }
    }
  }
  tab.null_prob.resize(static_cast<std::size_t>(N));
  tab.null_words.resize(static_cast<std::size_t>(N));
  for (int t = 0; t < N; ++t) {
    tab.null_words[static_cast<std::size_t>(t)] = pair.summary[static_cast<std::size_t>(t)].surface;
    tab.null_prob[static_cast<std::size_t>(t)] = null_prob(pair.summary[static_cast<std::size_t>(t)].surface);
  }
  return tab;
}

void RewriteModel::accumulate(const PairRewriteTable& table, std::span<const double> phrase_posteriors,
                              std::span<const double> null_posteriors, RewriteCounts& out) const {
  if (phrase_posteriors.size() != table.terms.size() ||
      null_posteriors.size() != static_cast<std::size_t>(table.summary_len))
    throw NumericalError("posterior tables do not match the rewrite table");
  for (int k = 0; k < table.phrases; ++k) {
    for (int t = 0; t < table.summary_len; ++t) {
      for (int len = 1; len <= table.max_len && t + len <= table.summary_len; ++len) {
        const std::size_t idx = table.index(k, t, len);
        const double g = phrase_posteriors[idx];
        if (!(g > 0.0)) continue;
        const auto& tm = table.terms[idx];
        const double total = tm[0] + tm[1] + tm[2] + tm[3];
        if (!(total > 0.0)) throw NumericalError("posterior mass on a zero-probability emission");
        for (std::size_t m = 0; m < kSubmodels; ++m) out.membership[m] += g * tm[m] / total;
        out.emissions += g;
        const int d = table.doc_ids[static_cast<std::size_t>(k)];
        const int s = table.sum_ids[static_cast<std::size_t>(t) * static_cast<std::size_t>(table.max_len) +
                                    static_cast<std::size_t>(len - 1)];
        if (d >= 0 && s >= 0 && entry_index_.count(entry_key(d, s)))
          out.lexical[entry_key(d, s)] += g * tm[kLexical] / total;
        const int dist = table.wn_dist[idx];
        if (d >= 0 && dist >= 0 && tm[kWordNet] > 0.0) out.wn[{d, dist}] += g * tm[kWordNet] / total;
      }
    }
  }
  for (int t = 0; t < table.summary_len; ++t) {
    const double g = null_posteriors[static_cast<std::size_t>(t)];
    if (g > 0.0) {
      out.null_emissions[table.null_words[static_cast<std::size_t>(t)]] += g;
      out.emissions += g;
    }
  }
}

// ---------------------------------------------------------------- M-steps

void RewriteModel::reestimate_ttable(const RewriteCounts& counts) {
  if (!(counts.emissions > 0.0)) throw NumericalError("t-table re-estimation: no expected emissions");
  for (const auto& [b, e] : rows_) {
    double z = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      auto it = counts.lexical.find(entry_key(entries_[k].d, entries_[k].s));
      const double c = it == counts.lexical.end() ? 0.0 : it->second;
      if (c < 0.0) throw NumericalError("negative lexical count");
      entries_[k].prob = c + entries_[k].fake;
      z += entries_[k].prob;
    }
    for (std::size_t k = b; k < e; ++k)
      entries_[k].prob = z > 0.0 ? entries_[k].prob / z : 1.0 / static_cast<double>(e - b);
  }
}

void RewriteModel::reestimate_null(const RewriteCounts& counts) {
  const double a = opts_.null_smoothing;
  double z = 0.0;
  for (const auto& w : null_vocab_) {
    auto it = counts.null_emissions.find(w);
    z += (it == counts.null_emissions.end() ? 0.0 : it->second) + a;
  }
  for (const auto& w : null_vocab_) {
    auto it = counts.null_emissions.find(w);
    const double c = (it == counts.null_emissions.end() ? 0.0 : it->second) + a;
    null_table_[w] = z > 0.0 ? c / z : 1.0 / static_cast<double>(null_vocab_.size());
  }
}

std::array<double, kSubmodels> RewriteModel::reestimate_lambdas(const std::array<double, kSubmodels>& membership) {
  const double z = std::accumulate(membership.begin(), membership.end(), 0.0);
  if (!(z > 0.0)) throw NumericalError("lambda re-estimation: all membership mass is zero");
  std::array<double, kSubmodels> out{};
  for (std::size_t k = 0; k < kSubmodels; ++k) {
    if (membership[k] < 0.0) throw NumericalError("negative membership mass");
    out[k] = membership[k] / z;
  }
  return out;
}

double RewriteModel::eta_objective(const std::map<std::pair<int, int>, double>& wn_counts, double eta) const {
  double obj = 0.0;
  std::unordered_map<int, double> log_z;
  for (const auto& [key, mass] : wn_counts) {
    const auto [d, dist] = key;
    auto it = log_z.find(d);
    if (it == log_z.end()) {
      const auto& meta = meta_[static_cast<std::size_t>(d)];
      it = log_z.emplace(d, log_wn_norm_for(d, meta.synset, keys_[static_cast<std::size_t>(d)], eta)).first;
    }
    obj += mass * (-eta * dist - it->second);
  }
  return obj;
}

double RewriteModel::estimate_eta(const std::map<std::pair<int, int>, double>& wn_counts) const {
  double mass = 0.0;
  for (const auto& [k, v] : wn_counts) mass += v;
  if (!(mass > 0.0)) return eta_;
  // Golden-section search for the maximum on [eta_min, eta_max].
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = opts_.eta_min, b = opts_.eta_max;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = eta_objective(wn_counts, c), fd = eta_objective(wn_counts, d);
  while (b - a > opts_.eta_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = eta_objective(wn_counts, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = eta_objective(wn_counts, d);
    }
  }
  double best = (a + b) / 2.0;
  double fbest = eta_objective(wn_counts, best);
  for (double edge : {opts_.eta_min, opts_.eta_max}) {
    const double fe = eta_objective(wn_counts, edge);
    if (fe > fbest) {
      best = edge;
      fbest = fe;
    }
  }
  // Never accept a value worse than the current one.
  return fbest >= eta_objective(wn_counts, eta_) ? best : eta_;
}

void RewriteModel::reestimate(const RewriteCounts& counts) {
  reestimate_ttable(counts);
  reestimate_null(counts);
  const double mass = std::accumulate(counts.membership.begin(), counts.membership.end(), 0.0);
  if (mass > 0.0) lambdas_ = reestimate_lambdas(counts.membership);
  eta_ = estimate_eta(counts.wn);
}

double RewriteModel::log_prior() const {
  double s = 0.0;
  for (const auto& e : entries_) {
    if (e.fake > 0.0) s += e.fake * safe_log(e.prob);
  }
  if (opts_.null_smoothing > 0.0) {
    for (const auto& w : null_vocab_) s += opts_.null_smoothing * safe_log(null_prob(w));
  }
  return s;
}

double RewriteModel::expected_loglik(const RewriteCounts& counts) const {
  double q = 0.0;
  for (std::size_t k = 0; k < kSubmodels; ++k) {
    if (counts.membership[k] > 0.0) q += counts.membership[k] * safe_log(lambdas_[k]);
  }
  for (const auto& [key, v] : counts.lexical) {
    if (v > 0.0) q += v * safe_log(entries_[entry_index_.at(key)].prob);
  }
  q += eta_objective(counts.wn, eta_);
  for (const auto& [w, v] : counts.null_emissions) {
    if (v > 0.0) q += v * safe_log(null_prob(w));
  }
  return q;
}

// ---------------------------------------------------------------- inspection

int RewriteModel::phrase_id(const std::string& key) const {
  auto it = key_index_.find(key);
  return it == key_index_.end() ? -1 : it->second;
}

std::optional<double> RewriteModel::ttable_entry(const std::string& d, const std::string& s) const {
  const int di = phrase_id(d), si = phrase_id(s);
  if (di < 0 || si < 0) return std::nullopt;
  auto it = entry_index_.find(entry_key(di, si));
  if (it == entry_index_.end()) return std::nullopt;
  return entries_[it->second].prob;
}

std::optional<double> RewriteModel::entry_fake(const std::string& d, const std::string& s) const {
  const int di = phrase_id(d), si = phrase_id(s);
  if (di < 0 || si < 0) return std::nullopt;
  auto it = entry_index_.find(entry_key(di, si));
  if (it == entry_index_.end()) return std::nullopt;
  return entries_[it->second].fake;
}

std::vector<std::pair<std::string, double>> RewriteModel::ttable_row(const std::string& d) const {
  std::vector<std::pair<std::string, double>> out;
  const int di = phrase_id(d);
  if (di < 0) return out;
  for (const auto& [b, e] : rows_) {
    if (entries_[b].d != di) continue;
    for (std::size_t k = b; k < e; ++k) out.emplace_back(keys_[static_cast<std::size_t>(entries_[k].s)], entries_[k].prob);
  }
  return out;
}

void RewriteModel::set_ttable_entry(const std::string& d, const std::string& s, double value) {
  const int di = phrase_id(d), si = phrase_id(s);
  auto it = di >= 0 && si >= 0 ? entry_index_.find(entry_key(di, si)) : entry_index_.end();
  if (it == entry_index_.end()) throw DataError("no t-table entry for '" + d + "' -> '" + s + "'");
  entries_[it->second].prob = value;
}

// ---------------------------------------------------------------- I/O

void RewriteModel::write(std::ostream& out) const {
  out << "# sumalign rewrite model\n";
  out << "# lambda";
  for (double l : lambdas_) out << ' ' << format_double(l);
  out << '\n';
  out << "# eta " << format_double(eta_) << '\n';
  out << "# eta_range " << format_double(opts_.eta_min) << ' ' << format_double(opts_.eta_max) << ' '
      << format_double(opts_.eta_tol) << '\n';
  out << "# prior singleton=" << format_double(opts_.prior.singleton_fake)
      << " identity=" << format_double(opts_.prior.lexical_identity_fake)
      << " stem=" << format_double(opts_.prior.stem_identity_fake) << '\n';
  out << "# null_smoothing " << format_double(opts_.null_smoothing) << '\n';
  out << "# bounds " << opts_.max_doc_phrase_len << ' ' << opts_.max_summary_phrase_len << '\n';
  out << "# support co-occurring phrase pairs; stem and hypernym normalisers over the corpus vocabulary\n";
  out << "## ttable\n";
  for (const auto& e : entries_)
    out << keys_[static_cast<std::size_t>(e.d)] << '\t' << keys_[static_cast<std::size_t>(e.s)] << '\t'
        << format_double(e.prob) << '\n';
  out << "## null\n";
  for (const auto& w : null_vocab_) out << w << '\t' << format_double(null_prob(w)) << '\n';
  out << "## vocab\n";
  for (const auto& w : vocab_) out << w << '\n';
  out << "## wnsupport\n";
  for (const auto& k : wn_support_) out << k << '\n';
}

RewriteModel RewriteModel::read(std::istream& in, std::shared_ptr<const HypernymGraph> graph,
                                const std::string& source) {
  RewriteModel m;
  m.graph_ = std::move(graph);
  std::string section;
  std::vector<std::tuple<std::string, std::string, double>> rows;
  std::vector<std::pair<std::string, double>> nulls;
  std::string line;
  std::size_t line_no = 0;
  bool have_lambda = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.rfind("## ", 0) == 0) {
      section = line.substr(3);
      continue;
    }
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "lambda") {
        for (auto& l : m.lambdas_) hs >> l;
        have_lambda = static_cast<bool>(hs);
      } else if (key == "eta") {
        hs >> m.eta_;
      } else if (key == "eta_range") {
        hs >> m.opts_.eta_min >> m.opts_.eta_max >> m.opts_.eta_tol;
      } else if (key == "null_smoothing") {
        hs >> m.opts_.null_smoothing;
      } else if (key == "bounds") {
        hs >> m.opts_.max_doc_phrase_len >> m.opts_.max_summary_phrase_len;
      } else if (key == "prior") {
        std::string kv;
        while (hs >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw DataError(where + ": malformed prior field '" + kv + "'");
          const std::string k = kv.substr(0, eq);
          const double v = std::stod(kv.substr(eq + 1));
          if (k == "singleton") m.opts_.prior.singleton_fake = v;
          else if (k == "identity") m.opts_.prior.lexical_identity_fake = v;
          else if (k == "stem") m.opts_.prior.stem_identity_fake = v;
          else throw DataError(where + ": unknown prior field '" + k + "'");
        }
      }
      continue;
    }
    std::vector<std::string> f;
    {
      std::size_t pos = 0;
      while (true) {
        const auto tab = line.find('\t', pos);
        f.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
      }
    }
    try {
      if (section == "ttable") {
        if (f.size() != 3) throw DataError("expected doc_phrase<TAB>summary_phrase<TAB>prob");
        rows.emplace_back(f[0], f[1], std::stod(f[2]));
      } else if (section == "null") {
        if (f.size() != 2) throw DataError("expected word<TAB>prob");
        nulls.emplace_back(f[0], std::stod(f[1]));
      } else if (section == "vocab") {
        m.vocab_.push_back(f[0]);
      } else if (section == "wnsupport") {
        m.wn_support_.push_back(f[0]);
      } else {
        throw DataError("line outside any section");
      }
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    } catch (const std::exception&) {
      throw DataError(where + ": malformed number");
    }
  }
  if (!have_lambda) throw DataError(source + ": missing '# lambda' header");
  if (!(m.eta_ > 0.0)) throw DataError(source + ": eta must be positive");
  m.opts_.lambdas = m.lambdas_;
  m.opts_.eta = m.eta_;

  std::sort(m.vocab_.begin(), m.vocab_.end());
  for (const auto& w : m.vocab_) ++m.stem_counts_[stem(w)];
  std::set<std::string> key_set;
  for (const auto& [d, s, p] : rows) {
    key_set.insert(d);
    key_set.insert(s);
  }
  for (const auto& k : m.wn_support_) key_set.insert(k);
  std::vector<std::string> keys(key_set.begin(), key_set.end());
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < keys.size(); ++i) ids.emplace(keys[i], static_cast<int>(i));
  std::vector<std::uint64_t> pairs;
  pairs.reserve(rows.size());
  for (const auto& [d, s, p] : rows) pairs.push_back(entry_key(ids.at(d), ids.at(s)));
  m.build_index(std::move(keys), std::move(pairs));
  for (const auto& [d, s, p] : rows) m.entries_[m.entry_index_.at(entry_key(ids.at(d), ids.at(s)))].prob = p;
  for (const auto& [w, p] : nulls) {
    m.null_vocab_.push_back(w);
    m.null_table_[w] = p;
  }
  std::sort(m.null_vocab_.begin(), m.null_vocab_.end());
  std::sort(m.wn_support_.begin(), m.wn_support_.end());
  m.build_norms();
  return m;
}

void RewriteModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write(out);
}

RewriteModel RewriteModel::load(const std::filesystem::path& path, std::shared_ptr<const HypernymGraph> graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open rewrite model '" + path.string() + "'");
  return read(in, std::move(graph), path.string());
}

}  // namespace sumalign
