#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sumalign/alignment.hpp"
#include "sumalign/corpus.hpp"

namespace sumalign {

// Desk-scale corpora sampled from a known generative process, with the
// planted alignment as gold. Rewrites are word-for-word, so every planted
// phrase gets diagonal Sure pairs plus a full-span Possible.
struct SyntheticConfig {
  std::size_t pairs = 100;
  int doc_len = 40;  // target mean; each document ends one sampled jump past its last segment
  int sentence_len = 10;
  int summary_len = 10;  // target token count
  int max_phrase_len = 3;
  int vocab_size = 3000;
  double null_rate = 0.1;
  // Among non-null segments: rewrite kind shares (rest is identity).
  double stem_rate = 0.05;
  double lexical_rate = 0.05;
  double synonym_rate = 0.0;
  // Probability that a segment jumps backwards instead of forwards.
  double reorder_rate = 0.05;
  bool with_parses = true;
  std::uint64_t seed = 1;
  std::string id_prefix = "p";
};

struct SyntheticCorpus {
  std::vector<TokenizedPair> pairs;
  AlignmentCorpus gold;
  std::shared_ptr<HypernymGraph> graph;  // synonym groups, or an empty graph
};

SyntheticCorpus generate_corpus(const SyntheticConfig& config);

// Presets.
SyntheticConfig planted_config(std::uint64_t seed = 1);
SyntheticConfig identity_heavy_config(std::uint64_t seed = 1);
SyntheticConfig reorder_heavy_config(std::uint64_t seed = 1);
SyntheticConfig null_heavy_config(std::uint64_t seed = 1);
SyntheticConfig synonym_reorder_config(std::uint64_t seed = 1);

// Random binary/ternary bracketing over one sentence; preterminal tags and
// phrase labels come from small fixed inventories.
ParseTree random_tree(const std::vector<std::string>& words, std::mt19937_64& rng);

// Pronounceable lowercase pseudo-words, all distinct.
std::vector<std::string> pseudo_words(std::size_t count, std::mt19937_64& rng);

}  // namespace sumalign
