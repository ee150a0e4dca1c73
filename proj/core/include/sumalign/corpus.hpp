#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sumalign {

using StopList = std::unordered_set<std::string>;

struct Token {
  std::string surface;
  std::string stem;
  bool is_stop = false;
  std::size_t index = 0;  // position within its side, 0-based
};

// One side (document or summary) of a pair: a flat token sequence plus the
// offsets at which each sentence begins.
class Side {
 public:
  Side() = default;
  explicit Side(const std::vector<std::vector<std::string>>& sentences);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<Token>& tokens() const { return tokens_; }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }

  std::size_t sentence_count() const { return sentence_starts_.size(); }
  std::size_t sentence_begin(std::size_t k) const { return sentence_starts_[k]; }
  std::size_t sentence_end(std::size_t k) const;
  std::span<const Token> sentence(std::size_t k) const;
  // Index of the sentence containing token i.
  std::size_t sentence_of(std::size_t i) const;

  std::vector<std::string> surfaces() const;
  void mark_stops(const StopList& stops);

 private:
  std::vector<Token> tokens_;
  std::vector<std::size_t> sentence_starts_;
};

// Constituency tree over one document sentence. Spans are sentence-local
// token indices, inclusive. Preterminals carry the word and have no children.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  std::size_t first = 0;
  std::size_t last = 0;
  std::optional<std::string> word;

  bool is_preterminal() const { return word.has_value(); }
  std::size_t leaf_count() const { return last - first + 1; }
};

ParseTree parse_bracketed(std::string_view text);
std::string to_bracketed(const ParseTree& tree);

struct TokenizedPair {
  std::string id;
  Side doc;
  Side summary;
  std::optional<std::vector<ParseTree>> doc_parses;
};

// Synset graph exported from a lexical database. Edges point from a synset
// to its hypernym(s).
class HypernymGraph {
 public:
  void add_edge(const std::string& child, const std::string& parent);
  void add_sense(const std::string& lemma, const std::string& synset);
  // Throws DataError with a witness cycle when the parent relation is cyclic.
  void validate() const;

  std::size_t node_count() const { return nodes_.size(); }
  bool has_node(const std::string& synset) const { return nodes_.count(synset) != 0; }
  std::optional<std::string> first_sense(const std::string& lemma) const;
  const std::vector<std::string>& parents(const std::string& synset) const;
  // Every ancestor (including the node itself at depth 0) with its minimum
  // number of upward edges.
  std::map<std::string, int> ancestors(const std::string& synset) const;
  // Edge count through the closest common hypernym; nullopt if the upward
  // paths never meet.
  std::optional<int> synset_distance(const std::string& a, const std::string& b) const;

 private:
  std::map<std::string, std::vector<std::string>> parents_;
  std::unordered_set<std::string> nodes_;
  std::unordered_map<std::string, std::string> first_sense_;
};

struct SideStats {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t unique_words = 0;
  double sentences_per_doc = 0.0;
  double words_per_doc = 0.0;
  double words_per_sentence = 0.0;
};

struct CorpusStats {
  std::size_t num_pairs = 0;
  SideStats summary;
  SideStats doc;
  std::size_t unique_words_combined = 0;
  double compression_rate = 0.0;  // summary words / document words
};

std::vector<TokenizedPair> load_pairs(const std::filesystem::path& path, const StopList& stops = {});
std::vector<TokenizedPair> parse_pairs(std::string_view jsonl, const StopList& stops = {},
                                       const std::string& source = "<memory>");
void write_pairs(const std::filesystem::path& path, const std::vector<TokenizedPair>& pairs,
                 bool approximate_extract = false);

TokenizedPair make_pair(std::string id, const std::vector<std::vector<std::string>>& doc,
                        const std::vector<std::vector<std::string>>& summary, const StopList& stops = {});

// Split on single spaces; the toolkit expects pre-tokenized text.
std::vector<std::string> tokenize(std::string_view line);

StopList load_stoplist(const std::filesystem::path& path);
StopList parse_stoplist(std::string_view text);
// The shipped ignore-list of function words and punctuation (58 entries).
const std::vector<std::string>& default_stoplist_entries();
StopList default_stoplist();

// Parse file: `#pair <id>` header followed by one tree per document sentence.
std::map<std::string, std::vector<ParseTree>> load_parse_file(const std::filesystem::path& path);
std::map<std::string, std::vector<ParseTree>> parse_parse_file(std::string_view text,
                                                               const std::string& source = "<memory>");
// Validates the trees against the pair's sentences and attaches them.
TokenizedPair attach_parses(TokenizedPair pair, std::vector<ParseTree> trees);
TokenizedPair load_parses(const std::filesystem::path& path, TokenizedPair pair);
void attach_all_parses(std::vector<TokenizedPair>& pairs, const std::map<std::string, std::vector<ParseTree>>& parses);

HypernymGraph load_hypernym_graph(const std::filesystem::path& path);
HypernymGraph parse_hypernym_graph(std::string_view text, const std::string& source = "<memory>");

CorpusStats corpus_stats(std::span<const TokenizedPair> pairs);

// Keeps, for each summary sentence, the k document sentences with the largest
// stem overlap (ties to the earlier sentence), in original order.
TokenizedPair select_extract(const TokenizedPair& pair, std::size_t k);

}  // namespace sumalign
