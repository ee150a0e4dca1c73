#include "sumalign/eval.hpp"

#include <algorithm>
#include <unordered_map>

#include "json.hpp"
#include "sumalign/error.hpp"
#include "sumalign/stemmer.hpp"

namespace sumalign {

using nlohmann::json;

WordPairSet expand_all_pairs(std::span<const AlignmentSpan> spans) {
  WordPairSet out;
  for (const auto& sp : spans) {
    for (int t = sp.sum.first; t <= sp.sum.second; ++t) {
      if (sp.is_null()) {
        out.emplace(kNullWord, t);
        continue;
      }
      for (int i = sp.doc->first; i <= sp.doc->second; ++i) out.emplace(i, t);
    }
  }
  return out;
}

namespace {

WordPairSet labelled_pairs(const AlignmentSet& gold, bool sure_only) {
  WordPairSet out;
  for (const auto& sp : gold.spans) {
    if (sp.is_null() || (sure_only && sp.label != Label::Sure)) continue;
    for (int t = sp.sum.first; t <= sp.sum.second; ++t)
      for (int i = sp.doc->first; i <= sp.doc->second; ++i) out.emplace(i, t);
  }
  return out;
}

WordPairSet without_null(const WordPairSet& s) {
  WordPairSet out;
  for (const auto& p : s) {
    if (p.first != kNullWord) out.insert(p);
  }
  return out;
}

WordPairSet filtered(const WordPairSet& s, const WordFilter* f) {
  if (!f) return s;
  WordPairSet out;
  for (const auto& p : s) {
    if (f->keeps(p)) out.insert(p);
  }
  return out;
}

std::size_t intersection_size(const WordPairSet& a, const WordPairSet& b) {
  std::size_t n = 0;
  for (const auto& p : a) n += b.count(p);
  return n;
}

}  // namespace

WordPairSet sure_pairs(const AlignmentSet& gold) { return labelled_pairs(gold, true); }
// Every sure span also counts as possible.
WordPairSet possible_pairs(const AlignmentSet& gold) { return labelled_pairs(gold, false); }

WordPairSet soft_hypothesis_pairs(const AlignmentSet& hyp, const WordPairSet& possible) {
  WordPairSet out;
  for (const auto& sp : hyp.spans) {
    if (sp.is_null()) continue;
    const int dl = sp.doc->second - sp.doc->first;
    const int sl = sp.sum.second - sp.sum.first;
    bool phrase_match = dl == sl;
    for (int k = 0; phrase_match && k <= sl; ++k)
      phrase_match = possible.count({sp.doc->first + k, sp.sum.first + k}) != 0;
    for (int t = sp.sum.first; t <= sp.sum.second; ++t) {
      for (int i = sp.doc->first; i <= sp.doc->second; ++i) {
        if (phrase_match && !possible.count({i, t})) continue;
        out.emplace(i, t);
      }
    }
  }
  return out;
}

void PairCounts::add(const PairCounts& o) {
  hyp += o.hyp;
  hyp_possible += o.hyp_possible;
  soft_hyp += o.soft_hyp;
  soft_hyp_possible += o.soft_hyp_possible;
  sure += o.sure;
  hyp_sure += o.hyp_sure;
}

bool WordFilter::keeps(const WordPair& p) const {
  if (p.first != kNullWord) {
    if (p.first < 0 || static_cast<std::size_t>(p.first) >= doc_keep.size()) return false;
    if (!doc_keep[static_cast<std::size_t>(p.first)]) return false;
  }
  if (p.second < 0 || static_cast<std::size_t>(p.second) >= sum_keep.size()) return false;
  return sum_keep[static_cast<std::size_t>(p.second)];
}

PairCounts count_pairs(const AlignmentSet& hyp, const AlignmentSet& gold, const WordFilter* filter) {
  const WordPairSet S = filtered(sure_pairs(gold), filter);
  const WordPairSet P = filtered(possible_pairs(gold), filter);
  const WordPairSet A = filtered(without_null(expand_all_pairs(hyp.spans)), filter);
  const WordPairSet soft = filtered(soft_hypothesis_pairs(hyp, possible_pairs(gold)), filter);
  PairCounts c;
  c.hyp = A.size();
  c.hyp_possible = intersection_size(A, P);
  c.soft_hyp = soft.size();
  c.soft_hyp_possible = intersection_size(soft, P);
  c.sure = S.size();
  c.hyp_sure = intersection_size(A, S);
  return c;
}

double f_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

MetricSection section_from_counts(const PairCounts& c) {
  MetricSection s;
  s.counts = c;
  s.empty_hypothesis = c.hyp == 0;
  s.recall_undefined = c.sure == 0;
  s.soft_precision = c.soft_hyp ? static_cast<double>(c.soft_hyp_possible) / static_cast<double>(c.soft_hyp) : 1.0;
  s.strict_precision = c.hyp ? static_cast<double>(c.hyp_possible) / static_cast<double>(c.hyp) : 1.0;
  s.recall = c.sure ? static_cast<double>(c.hyp_sure) / static_cast<double>(c.sure) : 0.0;
  s.soft_fscore = f_score(s.soft_precision, s.recall);
  return s;
}

double soft_precision(const AlignmentSet& hyp, const AlignmentSet& gold) {
  return section_from_counts(count_pairs(hyp, gold)).soft_precision;
}

double strict_precision(const AlignmentSet& hyp, const AlignmentSet& gold) {
  return section_from_counts(count_pairs(hyp, gold)).strict_precision;
}

std::optional<double> recall(const AlignmentSet& hyp, const AlignmentSet& gold) {
  const PairCounts c = count_pairs(hyp, gold);
  if (c.sure == 0) return std::nullopt;
  return static_cast<double>(c.hyp_sure) / static_cast<double>(c.sure);
}

namespace {

bool is_stop(const Token& tok, const StopList& stops) {
  return stops.count(tok.surface) || stops.count(to_lower(tok.surface));
}

WordFilter stop_filter(const TokenizedPair& pair, const StopList& stops) {
  WordFilter f;
  for (const auto& t : pair.doc.tokens()) f.doc_keep.push_back(!is_stop(t, stops));
  for (const auto& t : pair.summary.tokens()) f.sum_keep.push_back(!is_stop(t, stops));
  return f;
}

void check_ranges(const AlignmentSet& set, const TokenizedPair& pair, const std::string& what) {
  const int n = static_cast<int>(pair.doc.size()), N = static_cast<int>(pair.summary.size());
  for (const auto& sp : set.spans) {
    if (sp.sum.second >= N || (sp.doc && sp.doc->second >= n))
      throw DataError(what + " span " + format_span(set.pair_id, sp) + " lies outside pair '" + pair.id + "'");
  }
}

std::map<std::string, const TokenizedPair*> index_pairs(std::span<const TokenizedPair> pairs) {
  std::map<std::string, const TokenizedPair*> out;
  for (const auto& p : pairs) out[p.id] = &p;
  return out;
}

}  // namespace

EvalReport evaluate(const AlignmentCorpus& hyp, const AlignmentCorpus& gold, std::span<const TokenizedPair> pairs,
                    const StopList& stops) {
  for (const auto& [id, _] : hyp.pairs) {
    if (!gold.pairs.count(id)) throw DataError("hypothesis pair '" + id + "' has no gold alignment");
  }
  const auto by_id = index_pairs(pairs);
  const std::set<std::string> skipped(hyp.unalignable.begin(), hyp.unalignable.end());
  PairCounts all, non_stop;
  EvalReport rep;
  const AlignmentSet empty;
  for (const auto& [id, g] : gold.pairs) {
    const auto h = hyp.pairs.find(id);
    if (h == hyp.pairs.end() && !skipped.count(id))
      throw DataError("gold pair '" + id + "' is missing from the hypothesis");
    const AlignmentSet& hs = h == hyp.pairs.end() ? empty : h->second;
    const auto p = by_id.find(id);
    if (p == by_id.end()) throw DataError("pair '" + id + "' is not in the corpus");
    check_ranges(g, *p->second, "gold");
    check_ranges(hs, *p->second, "hypothesis");
    all.add(count_pairs(hs, g));
    const WordFilter f = stop_filter(*p->second, stops);
    non_stop.add(count_pairs(hs, g, &f));
    ++rep.pairs;
  }
  rep.all_words = section_from_counts(all);
  rep.non_stop = section_from_counts(non_stop);
  if (rep.all_words.empty_hypothesis) rep.flags.push_back("empty_hypothesis");
  if (rep.all_words.recall_undefined) rep.flags.push_back("recall_undefined");
  if (non_stop.hyp == 0 && non_stop.sure == 0) rep.flags.push_back("non_stop_empty");
  if (!hyp.unalignable.empty()) rep.flags.push_back("unalignable_pairs_scored_empty");
  return rep;
}

namespace {

json section_json(const MetricSection& s) {
  return {{"soft_precision", s.soft_precision},
          {"strict_precision", s.strict_precision},
          {"recall", s.recall},
          {"soft_fscore", s.soft_fscore},
          {"empty_hypothesis", s.empty_hypothesis},
          {"recall_undefined", s.recall_undefined},
          {"counts",
           {{"hyp_pairs", s.counts.hyp},
            {"hyp_in_possible", s.counts.hyp_possible},
            {"soft_hyp_pairs", s.counts.soft_hyp},
            {"soft_hyp_in_possible", s.counts.soft_hyp_possible},
            {"sure_pairs", s.counts.sure},
            {"hyp_in_sure", s.counts.hyp_sure}}}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string eval_report_json(const EvalReport& r) {
  json j;
  j["averaging"] = "micro";
  j["pairs"] = r.pairs;
  j["all_words"] = section_json(r.all_words);
  j["non_stop"] = section_json(r.non_stop);
  j["flags"] = r.flags;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- kappa

std::optional<double> kappa(const Contingency& c) {
  const double total = c.yes_yes + c.yes_no + c.no_yes + c.no_no;
  if (!(total > 0.0)) return std::nullopt;
  const double pa = (c.yes_yes + c.no_no) / total;
  const double a_yes = (c.yes_yes + c.yes_no) / total;
  const double b_yes = (c.yes_yes + c.no_yes) / total;
  const double pe = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
  if (pe >= 1.0) return std::nullopt;
  return (pa - pe) / (1.0 - pe);
}

Contingency contingency(const WordPairSet& a, const WordPairSet& b, std::size_t universe_size) {
  const std::size_t both = intersection_size(a, b);
  Contingency c;
  c.yes_yes = static_cast<double>(both);
  c.yes_no = static_cast<double>(a.size() - both);
  c.no_yes = static_cast<double>(b.size() - both);
  const std::size_t used = a.size() + b.size() - both;
  if (used > universe_size) throw DataError("annotations mark more items than the universe holds");
  c.no_no = static_cast<double>(universe_size - used);
  return c;
}

std::optional<double> kappa(const WordPairSet& a, const WordPairSet& b, std::size_t universe_size) {
  return kappa(contingency(a, b, universe_size));
}

AgreementReport agreement(const AlignmentCorpus& a, const AlignmentCorpus& b, std::span<const TokenizedPair> pairs,
                          const StopList& stops) {
  const auto by_id = index_pairs(pairs);
  std::set<std::string> ids;
  for (const auto& [id, _] : a.pairs) ids.insert(id);
  for (const auto& [id, _] : b.pairs) ids.insert(id);
  Contingency sure_all, sure_ns, poss_all, poss_ns;
  auto acc = [](Contingency& into, const Contingency& c) {
    into.yes_yes += c.yes_yes;
    into.yes_no += c.yes_no;
    into.no_yes += c.no_yes;
    into.no_no += c.no_no;
  };
  AgreementReport rep;
  const AlignmentSet empty;
  for (const auto& id : ids) {
    const auto p = by_id.find(id);
    if (p == by_id.end()) throw DataError("pair '" + id + "' is not in the corpus");
    const TokenizedPair& pair = *p->second;
    const AlignmentSet& sa = a.pairs.count(id) ? a.pairs.at(id) : empty;
    const AlignmentSet& sb = b.pairs.count(id) ? b.pairs.at(id) : empty;
    check_ranges(sa, pair, "first annotation");
    check_ranges(sb, pair, "second annotation");
    const WordFilter f = stop_filter(pair, stops);
    const std::size_t u = pair.doc.size() * pair.summary.size();
    const std::size_t u_ns = static_cast<std::size_t>(std::count(f.doc_keep.begin(), f.doc_keep.end(), true)) *
                             static_cast<std::size_t>(std::count(f.sum_keep.begin(), f.sum_keep.end(), true));
    acc(sure_all, contingency(sure_pairs(sa), sure_pairs(sb), u));
    acc(sure_ns, contingency(filtered(sure_pairs(sa), &f), filtered(sure_pairs(sb), &f), u_ns));
    acc(poss_all, contingency(possible_pairs(sa), possible_pairs(sb), u));
    acc(poss_ns, contingency(filtered(possible_pairs(sa), &f), filtered(possible_pairs(sb), &f), u_ns));
    rep.universe_all += u;
    rep.universe_non_stop += u_ns;
    ++rep.pairs;
  }
  rep.sure_all = kappa(sure_all);
  rep.sure_non_stop = kappa(sure_ns);
  rep.possible_all = kappa(poss_all);
  rep.possible_non_stop = kappa(poss_ns);
  return rep;
}

std::string agreement_json(const AgreementReport& r) {
  json j;
  j["pairs"] = r.pairs;
  j["universe_all"] = r.universe_all;
  j["universe_non_stop"] = r.universe_non_stop;
  j["kappa_sure_all"] = optional_json(r.sure_all);
  j["kappa_sure_non_stop"] = optional_json(r.sure_non_stop);
  j["kappa_possible_all"] = optional_json(r.possible_all);
  j["kappa_possible_non_stop"] = optional_json(r.possible_non_stop);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- oracle null

AlignmentSet oracle_null_project(const AlignmentSet& hyp, const AlignmentSet& gold) {
  std::set<int> null_words;
  for (const auto& sp : gold.spans) {
    if (!sp.is_null()) continue;
    for (int t = sp.sum.first; t <= sp.sum.second; ++t) null_words.insert(t);
  }
  if (null_words.empty()) return hyp;
  AlignmentSet out;
  out.pair_id = hyp.pair_id;
  std::set<int> emitted_null;
  for (const auto& sp : hyp.spans) {
    if (sp.is_null()) {
      out.spans.push_back(sp);
      for (int t = sp.sum.first; t <= sp.sum.second; ++t) emitted_null.insert(t);
    }
  }
  for (const auto& sp : hyp.spans) {
    if (sp.is_null()) continue;
    int run = sp.sum.first;
    for (int t = sp.sum.first; t <= sp.sum.second + 1; ++t) {
      const bool cut = t > sp.sum.second || null_words.count(t);
      if (!cut) continue;
      if (run < t) {
        AlignmentSpan piece = sp;
        piece.sum = {run, t - 1};
        out.spans.push_back(piece);
      }
      if (t <= sp.sum.second && emitted_null.insert(t).second) {
        AlignmentSpan n;
        n.sum = {t, t};
        n.label = sp.label;
        out.spans.push_back(n);
      }
      run = t + 1;
    }
  }
  return out;
}

AlignmentCorpus oracle_null_project(const AlignmentCorpus& hyp, const AlignmentCorpus& gold) {
  AlignmentCorpus out;
  out.unalignable = hyp.unalignable;
  for (const auto& [id, set] : hyp.pairs) {
    const auto g = gold.pairs.find(id);
    out.pairs[id] = g == gold.pairs.end() ? set : oracle_null_project(set, g->second);
  }
  return out;
}

// ---------------------------------------------------------------- cut & paste

AlignmentSet cutpaste_align(const TokenizedPair& pair, int min_block) {
  if (min_block < 1) throw DataError("cut-and-paste block length must be at least 1");
  const auto& d = pair.doc.tokens();
  const auto& s = pair.summary.tokens();
  const int n = static_cast<int>(d.size()), N = static_cast<int>(s.size());
  std::vector<bool> d_used(d.size(), false), s_used(s.size(), false);
  AlignmentSet out;
  out.pair_id = pair.id;
  std::vector<int> run(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(n + 1), 0);
  auto R = [&](int t, int i) -> int& { return run[static_cast<std::size_t>(t) * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(i)]; };
  while (true) {
    for (int t = N - 1; t >= 0; --t) {
      for (int i = n - 1; i >= 0; --i) {
        const bool ok = !s_used[static_cast<std::size_t>(t)] && !d_used[static_cast<std::size_t>(i)] &&
                        s[static_cast<std::size_t>(t)].stem == d[static_cast<std::size_t>(i)].stem;
        R(t, i) = ok ? 1 + R(t + 1, i + 1) : 0;
      }
    }
    int best = 0, bt = -1, bi = -1;
    for (int t = 0; t < N; ++t)
      for (int i = 0; i < n; ++i)
        if (R(t, i) > best) {
          best = R(t, i);
          bt = t;
          bi = i;
        }
    if (best < min_block) break;
    for (int k = 0; k < best; ++k) {
      s_used[static_cast<std::size_t>(bt + k)] = true;
      d_used[static_cast<std::size_t>(bi + k)] = true;
      AlignmentSpan sp;
      sp.doc = std::make_pair(bi + k, bi + k);
      sp.sum = {bt + k, bt + k};
      out.spans.push_back(sp);
    }
  }
  std::sort(out.spans.begin(), out.spans.end(), [](const AlignmentSpan& a, const AlignmentSpan& b) { return a.sum < b.sum; });
  return out;
}

// ---------------------------------------------------------------- Model 1

double Model1::prob(const std::string& d, const std::string& s) const {
  const auto it = t.find({d, s});
  return it == t.end() ? 0.0 : it->second;
}

Model1 train_model1(std::span<const TokenizedPair> corpus, int iterations) {
  if (iterations < 1) throw DataError("Model 1 needs at least one iteration");
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> data;
  std::set<std::string> vocab;
  for (const auto& p : corpus) {
    auto src = p.doc.surfaces();
    auto tgt = p.summary.surfaces();
    vocab.insert(src.begin(), src.end());
    vocab.insert(tgt.begin(), tgt.end());
    src.push_back(kNullSource);
    data.emplace_back(std::move(src), std::move(tgt));
  }
  // Identity seeding: one single-word pair per vocabulary item.
  for (const auto& w : vocab) data.push_back({{w, kNullSource}, {w}});

  Model1 m;
  std::map<std::string, std::set<std::string>> cooc;
  for (const auto& [src, tgt] : data)
    for (const auto& d : src) cooc[d].insert(tgt.begin(), tgt.end());
  for (const auto& [d, targets] : cooc)
    for (const auto& s : targets) m.t[{d, s}] = 1.0 / static_cast<double>(targets.size());

  for (int it = 0; it < iterations; ++it) {
    std::map<std::pair<std::string, std::string>, double> counts;
    for (const auto& [src, tgt] : data) {
      for (const auto& s : tgt) {
        double z = 0.0;
        for (const auto& d : src) z += m.prob(d, s);
        if (!(z > 0.0)) continue;
        for (const auto& d : src) counts[{d, s}] += m.prob(d, s) / z;
      }
    }
    std::map<std::string, double> totals;
    for (const auto& [k, v] : counts) totals[k.first] += v;
    for (auto& [k, v] : m.t) {
      const auto c = counts.find(k);
      v = c == counts.end() ? 0.0 : c->second / totals[k.first];
    }
  }
  return m;
}

AlignmentSet model1_align_pair(const Model1& model, const TokenizedPair& pair) {
  AlignmentSet out;
  out.pair_id = pair.id;
  const auto src = pair.doc.surfaces();
  const auto tgt = pair.summary.surfaces();
  for (std::size_t t = 0; t < tgt.size(); ++t) {
    int best_i = kNullWord;
    double best = -1.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double v = model.prob(src[i], tgt[t]);
      if (v > best) {
        best = v;
        best_i = static_cast<int>(i);
      }
    }
    // The null source wins only when strictly better.
    if (model.prob(kNullSource, tgt[t]) > best || best <= 0.0) best_i = kNullWord;
    AlignmentSpan sp;
    sp.sum = {static_cast<int>(t), static_cast<int>(t)};
    if (best_i != kNullWord) sp.doc = std::make_pair(best_i, best_i);
    out.spans.push_back(sp);
  }
  return out;
}

std::vector<AlignmentSet> model1_align(std::span<const TokenizedPair> corpus, int iterations) {
  const Model1 m = train_model1(corpus, iterations);
  std::vector<AlignmentSet> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.push_back(model1_align_pair(m, p));
  return out;
}

// ---------------------------------------------------------------- statistics

namespace {
double rate(std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }
}  // namespace

double AlignmentStats::unaligned_rate() const { return rate(unaligned_summary_words, summary_words); }
double AlignmentStats::identical_rate() const { return rate(identical_spans, spans); }
double AlignmentStats::stem_identical_rate() const { return rate(stem_identical_spans, spans); }
double AlignmentStats::singleton_rate() const { return rate(singleton_spans, spans); }

AlignmentStats alignment_stats(const AlignmentCorpus& alignments, std::span<const TokenizedPair> pairs, bool sure_only) {
  const auto by_id = index_pairs(pairs);
  AlignmentStats st;
  for (const auto& [id, set] : alignments.pairs) {
    const auto p = by_id.find(id);
    if (p == by_id.end()) throw DataError("pair '" + id + "' is not in the corpus");
    const TokenizedPair& pair = *p->second;
    check_ranges(set, pair, "alignment");
    std::vector<bool> covered(pair.summary.size(), false);
    for (const auto& sp : set.spans) {
      if (sp.is_null() || (sure_only && sp.label != Label::Sure)) continue;
      ++st.spans;
      const int dl = sp.doc->second - sp.doc->first + 1;
      const int sl = sp.sum.second - sp.sum.first + 1;
      if (dl == 1 && sl == 1) ++st.singleton_spans;
      bool same = dl == sl, same_stem = dl == sl;
      for (int k = 0; k < sl && same_stem; ++k) {
        const Token& a = pair.doc[static_cast<std::size_t>(sp.doc->first + k)];
        const Token& b = pair.summary[static_cast<std::size_t>(sp.sum.first + k)];
        same = same && a.surface == b.surface;
        same_stem = a.stem == b.stem;
      }
      if (same) ++st.identical_spans;
      if (same_stem) ++st.stem_identical_spans;
      for (int t = sp.sum.first; t <= sp.sum.second; ++t) covered[static_cast<std::size_t>(t)] = true;
    }
    st.summary_words += pair.summary.size();
    st.unaligned_summary_words += static_cast<std::size_t>(std::count(covered.begin(), covered.end(), false));
  }
  return st;
}

std::string alignment_stats_json(const AlignmentStats& s) {
  json j;
  j["summary_words"] = s.summary_words;
  j["unaligned_summary_words"] = s.unaligned_summary_words;
  j["unaligned_rate"] = s.unaligned_rate();
  j["spans"] = s.spans;
  j["identical_rate"] = s.identical_rate();
  j["stem_identical_rate"] = s.stem_identical_rate();
  j["singleton_rate"] = s.singleton_rate();
  return j.dump(2) + "\n";
}

}  // namespace sumalign
