#include "sumalign/synthetic.hpp"

#include <algorithm>
#include <set>

#include "sumalign/error.hpp"
#include "sumalign/stemmer.hpp"

namespace sumalign {

namespace {

const std::vector<std::string> kPreterminals = {"NN", "NNS", "NNP", "VBD", "VBZ", "JJ", "DT", "IN", "PRP", "RB"};
const std::vector<std::string> kPhrasal = {"NP", "VP", "PP", "ADJP", "SBAR"};

ParseTree build(const std::vector<std::string>& words, std::size_t a, std::size_t b, std::mt19937_64& rng,
                bool root) {
  ParseTree t;
  t.first = a;
  t.last = b;
  if (a == b) {
    std::uniform_int_distribution<std::size_t> tag(0, kPreterminals.size() - 1);
    t.label = kPreterminals[tag(rng)];
    t.word = words[a];
    if (!root) return t;
    // A one-word sentence still gets a clause node above the preterminal.
    ParseTree s;
    s.label = "S";
    s.first = a;
    s.last = b;
    s.children.push_back(std::move(t));
    return s;
  }
  std::uniform_int_distribution<std::size_t> label(0, kPhrasal.size() - 1);
  t.label = root ? "S" : kPhrasal[label(rng)];
  const std::size_t len = b - a + 1;
  std::bernoulli_distribution three(0.3);
  const std::size_t kids = (len >= 3 && three(rng)) ? 3 : 2;
  // Distinct cut points strictly inside the span.
  std::vector<std::size_t> cuts;
  std::uniform_int_distribution<std::size_t> cut(a + 1, b);
  while (cuts.size() + 1 < kids) {
    const std::size_t c = cut(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::size_t from = a;
  for (std::size_t c : cuts) {
    t.children.push_back(build(words, from, c - 1, rng, false));
    from = c;
  }
  t.children.push_back(build(words, from, b, rng, false));
  return t;
}

// A suffixed form sharing the word's stem, or the word itself if none works.
std::string stem_variant(const std::string& w) {
  for (const char* suffix : {"ed", "s", "ing"}) {
    const std::string v = w + suffix;
    if (stem(v) == stem(w)) return v;
  }
  return w;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

}  // namespace

std::vector<std::string> pseudo_words(std::size_t count, std::mt19937_64& rng) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::uniform_int_distribution<std::size_t> c(0, consonants.size() - 1), v(0, vowels.size() - 1);
  std::uniform_int_distribution<int> syllables(2, 3);
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    const int k = syllables(rng);
    for (int s = 0; s < k; ++s) {
      w += consonants[c(rng)];
      w += vowels[v(rng)];
    }
    w += consonants[c(rng)];
    // Keep only words the stemmer leaves alone so variants stay predictable.
    if (stem(w) != w || !seen.insert(w).second) continue;
    out.push_back(w);
  }
  return out;
}

ParseTree random_tree(const std::vector<std::string>& words, std::mt19937_64& rng) {
  if (words.empty()) throw DataError("cannot build a tree over an empty sentence");
  return build(words, 0, words.size() - 1, rng, true);
}

SyntheticCorpus generate_corpus(const SyntheticConfig& cfg) {
  if (cfg.pairs == 0 || cfg.doc_len < 1 || cfg.summary_len < 1 || cfg.sentence_len < 1 || cfg.max_phrase_len < 1 ||
      cfg.vocab_size < 1)
    throw DataError("synthetic corpus configuration has a zero size");
  std::mt19937_64 rng(cfg.seed);
  const auto vocab_size = static_cast<std::size_t>(cfg.vocab_size);
  // One draw, split into the document vocabulary, lexical paraphrases,
  // synonyms and the null-word pool, so the four never overlap.
  const std::vector<std::string> all = pseudo_words(3 * vocab_size + 40, rng);
  const std::vector<std::string> vocab(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(vocab_size));
  const std::vector<std::string> para(all.begin() + static_cast<std::ptrdiff_t>(vocab_size),
                                      all.begin() + static_cast<std::ptrdiff_t>(2 * vocab_size));
  const std::vector<std::string> syn(all.begin() + static_cast<std::ptrdiff_t>(2 * vocab_size),
                                     all.begin() + static_cast<std::ptrdiff_t>(3 * vocab_size));
  const std::vector<std::string> nulls(all.begin() + static_cast<std::ptrdiff_t>(3 * vocab_size), all.end());

  SyntheticCorpus out;
  out.graph = std::make_shared<HypernymGraph>();
  std::unordered_map<std::string, std::size_t> vocab_index;
  for (std::size_t k = 0; k < vocab.size(); ++k) vocab_index[vocab[k]] = k;
  // Half the vocabulary has a synonym two edges away. Groups share no root,
  // so unrelated words are at infinite distance.
  const std::size_t synonym_count = cfg.synonym_rate > 0.0 ? vocab_size / 2 : 0;
  for (std::size_t k = 0; k < synonym_count; ++k) {
    const std::string group = "group" + std::to_string(k) + ".n.01";
    out.graph->add_edge(vocab[k] + ".n.01", group);
    out.graph->add_edge(syn[k] + ".n.01", group);
    out.graph->add_sense(vocab[k], vocab[k] + ".n.01");
    out.graph->add_sense(syn[k], syn[k] + ".n.01");
  }
  out.graph->validate();

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> backward_jump(-6, 0);
  std::discrete_distribution<int> phrase_len({0.5, 0.3, 0.2});
  std::uniform_int_distribution<std::size_t> word(0, vocab_size - 1);

  // Forward jumps skip a geometric number of words, with the mean chosen so a
  // summary of summary_len tokens spans about doc_len positions. The closing
  // jump into End uses the same law and fixes the document length, so every
  // planted path is one the model itself can generate.
  double mean_len = 0.0;
  {
    const double w[] = {0.5, 0.3, 0.2};
    for (int k = 0; k < 3; ++k) mean_len += w[k] * std::min(k + 1, cfg.max_phrase_len);
  }
  const double aligned = cfg.summary_len * (1.0 - cfg.null_rate);
  const double segments = std::max(1.0, aligned / mean_len);
  const double mean_gap = std::max(0.0, (cfg.doc_len - aligned) / (segments + 1.0));
  std::geometric_distribution<int> gap(1.0 / (1.0 + mean_gap));

  const int width = std::max<int>(3, static_cast<int>(std::to_string(cfg.pairs).size()));
  for (std::size_t pi = 0; pi < cfg.pairs; ++pi) {
    std::string id = std::to_string(pi);
    id = cfg.id_prefix + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), static_cast<std::size_t>(width)), '0') + id;

    // Drawn up front and cut to the sampled length at the end.
    std::vector<std::string> doc;
    const int capacity = 4 * cfg.doc_len + 64;
    for (int k = 0; k < capacity; ++k) doc.push_back(vocab[word(rng)]);

    std::vector<std::string> summary;
    AlignmentSet gold;
    gold.pair_id = id;
    int p = 0;
    int used = 0;  // rightmost document position emitted from
    for (int guard = 0; static_cast<int>(summary.size()) < cfg.summary_len && guard < 10 * cfg.summary_len; ++guard) {
      const int t = static_cast<int>(summary.size());
      if (unif(rng) < cfg.null_rate) {
        summary.push_back(pick(nulls, rng));
        p = std::max(1, p);
        AlignmentSpan sp;
        sp.sum = {t, t};
        gold.spans.push_back(sp);
        continue;
      }
      int j;
      if (unif(rng) < cfg.reorder_rate && p >= 1) {
        j = std::max(1, p + backward_jump(rng));
      } else {
        j = p + 1 + gap(rng);
      }
      if (j + cfg.max_phrase_len > capacity) break;
      int len = 1 + phrase_len(rng);
      len = std::min({len, cfg.max_phrase_len, cfg.summary_len - t});
      const double kind = unif(rng);
      for (int k = 0; k < len; ++k) {
        const std::string& w = doc[static_cast<std::size_t>(j - 1 + k)];
        const std::size_t vi = vocab_index.at(w);
        std::string s = w;
        if (kind < cfg.synonym_rate) {
          if (vi < synonym_count) s = syn[vi];
        } else if (kind < cfg.synonym_rate + cfg.lexical_rate) {
          s = para[vi];
        } else if (kind < cfg.synonym_rate + cfg.lexical_rate + cfg.stem_rate) {
          s = stem_variant(w);
        }
        summary.push_back(s);
        AlignmentSpan sp;
        sp.doc = std::make_pair(j - 1 + k, j - 1 + k);
        sp.sum = {t + k, t + k};
        gold.spans.push_back(sp);
      }
      if (len > 1) {
        AlignmentSpan sp;
        sp.doc = std::make_pair(j - 1, j - 2 + len);
        sp.sum = {t, t + len - 1};
        sp.label = Label::Possible;
        gold.spans.push_back(sp);
      }
      p = j + len - 1;
      used = std::max(used, p);
    }
    if (summary.empty()) {
      summary.push_back(doc[0]);
      AlignmentSpan sp;
      sp.doc = std::make_pair(0, 0);
      sp.sum = {0, 0};
      gold.spans.push_back(sp);
      p = used = 1;
    }
    // End sits at n + 1, one gap past the final anchor.
    const int n = std::min(capacity, std::max({1, used, p + gap(rng)}));
    doc.resize(static_cast<std::size_t>(n));

    std::vector<std::vector<std::string>> doc_sents;
    for (int k = 0; k < n; k += cfg.sentence_len)
      doc_sents.emplace_back(doc.begin() + k, doc.begin() + std::min(n, k + cfg.sentence_len));
    TokenizedPair pair = make_pair(id, doc_sents, {summary});
    if (cfg.with_parses) {
      std::vector<ParseTree> trees;
      for (const auto& s : doc_sents) trees.push_back(random_tree(s, rng));
      pair = attach_parses(std::move(pair), std::move(trees));
    }
    out.pairs.push_back(std::move(pair));
    out.gold.pairs[id] = std::move(gold);
  }
  return out;
}

SyntheticConfig planted_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.seed = seed;
  return c;
}

SyntheticConfig identity_heavy_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.pairs = 50;
  c.doc_len = 20;
  c.summary_len = 8;
  c.null_rate = 0.05;
  c.stem_rate = 0.02;
  c.lexical_rate = 0.02;
  c.reorder_rate = 0.02;
  c.vocab_size = 400;
  c.seed = seed;
  c.id_prefix = "id";
  return c;
}

SyntheticConfig reorder_heavy_config(std::uint64_t seed) {
  SyntheticConfig c = identity_heavy_config(seed);
  c.reorder_rate = 0.4;
  c.id_prefix = "ro";
  return c;
}

SyntheticConfig null_heavy_config(std::uint64_t seed) {
  SyntheticConfig c = identity_heavy_config(seed);
  c.null_rate = 0.4;
  c.id_prefix = "nu";
  return c;
}

SyntheticConfig synonym_reorder_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.pairs = 100;
  c.doc_len = 30;
  c.summary_len = 10;
  c.null_rate = 0.1;
  c.synonym_rate = 0.3;
  c.lexical_rate = 0.0;
  c.stem_rate = 0.05;
  c.reorder_rate = 0.35;
  c.vocab_size = 1000;
  c.seed = seed;
  c.id_prefix = "sy";
  return c;
}

}  // namespace sumalign
