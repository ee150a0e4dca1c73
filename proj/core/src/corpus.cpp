#include "sumalign/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sumalign/error.hpp"
#include "sumalign/stemmer.hpp"

namespace sumalign {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == text.size()) break;
    pos = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      out.emplace_back(line.substr(pos));
      return out;
    }
    out.emplace_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

// A side may be given as one string, a list of sentence strings, or a list of
// token lists.
std::vector<std::vector<std::string>> side_from_json(const json& j) {
  std::vector<std::vector<std::string>> sentences;
  if (j.is_string()) {
    sentences.push_back(tokenize(j.get<std::string>()));
  } else if (j.is_array()) {
    for (const auto& sent : j) {
      if (sent.is_string()) {
        sentences.push_back(tokenize(sent.get<std::string>()));
      } else if (sent.is_array()) {
        std::vector<std::string> toks;
        for (const auto& tok : sent) {
          if (!tok.is_string()) throw DataError("token is not a string");
          toks.push_back(tok.get<std::string>());
        }
        sentences.push_back(std::move(toks));
      } else {
        throw DataError("sentence must be a string or a list of tokens");
      }
    }
  } else {
    throw DataError("side must be a string or a list of sentences");
  }
  // Drop empty sentences; they carry no tokens and no boundaries matter.
  sentences.erase(std::remove_if(sentences.begin(), sentences.end(), [](const auto& s) { return s.empty(); }),
                  sentences.end());
  return sentences;
}

json side_to_json(const Side& side) {
  json out = json::array();
  for (std::size_t k = 0; k < side.sentence_count(); ++k) {
    json sent = json::array();
    for (const auto& tok : side.sentence(k)) sent.push_back(tok.surface);
    out.push_back(std::move(sent));
  }
  return out;
}

std::vector<std::vector<std::string>> side_sentences(const Side& side) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t k = 0; k < side.sentence_count(); ++k) {
    std::vector<std::string> sent;
    for (const auto& tok : side.sentence(k)) sent.push_back(tok.surface);
    out.push_back(std::move(sent));
  }
  return out;
}

// Recursive-descent reader for Penn-style brackets.
class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  ParseTree read_tree() {
    skip_ws();
    ParseTree tree = read_node();
    skip_ws();
    if (pos_ != text_.size()) throw DataError("trailing text after parse tree");
    std::size_t next = 0;
    assign_spans(tree, next);
    return tree;
  }

 private:
  ParseTree read_node() {
    expect('(');
    skip_ws();
    ParseTree node;
    if (peek() == '(') {
      // Unlabelled root such as "( (S ...) )".
      node.label = "ROOT";
    } else {
      node.label = read_atom();
    }
    skip_ws();
    if (peek() != '(' && peek() != ')') {
      node.word = read_atom();
      skip_ws();
      expect(')');
      return node;
    }
    while (true) {
      skip_ws();
      if (peek() == ')') break;
      node.children.push_back(read_node());
    }
    expect(')');
    if (node.children.empty()) throw DataError("empty constituent '" + node.label + "'");
    // Collapse the unlabelled wrapper around a single tree.
    if (node.label == "ROOT" && node.children.size() == 1) {
      ParseTree child = std::move(node.children.front());
      return child;
    }
    return node;
  }

  static void assign_spans(ParseTree& node, std::size_t& next) {
    if (node.is_preterminal()) {
      node.first = node.last = next++;
      return;
    }
    for (auto& child : node.children) assign_spans(child, next);
    node.first = node.children.front().first;
    node.last = node.children.back().last;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')')
      ++pos_;
    if (pos_ == start) throw DataError("expected a label or word at offset " + std::to_string(pos_));
    return std::string(text_.substr(start, pos_ - start));
  }

  char peek() {
    if (pos_ >= text_.size()) throw DataError("unbalanced brackets: unexpected end of tree");
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c)
      throw DataError(std::string("unbalanced brackets: expected '") + c + "' at offset " + std::to_string(pos_));
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void collect_words(const ParseTree& node, std::vector<std::string>& out) {
  if (node.is_preterminal()) {
    out.push_back(*node.word);
    return;
  }
  for (const auto& c : node.children) collect_words(c, out);
}

}  // namespace

// ---------------------------------------------------------------- Side

Side::Side(const std::vector<std::vector<std::string>>& sentences) {
  for (const auto& sent : sentences) {
    if (sent.empty()) continue;
    sentence_starts_.push_back(tokens_.size());
    for (const auto& w : sent) {
      Token tok;
      tok.surface = w;
      tok.stem = w.empty() ? std::string() : stem(w);
      tok.index = tokens_.size();
      tokens_.push_back(std::move(tok));
    }
  }
}

std::size_t Side::sentence_end(std::size_t k) const {
  return k + 1 < sentence_starts_.size() ? sentence_starts_[k + 1] : tokens_.size();
}

std::span<const Token> Side::sentence(std::size_t k) const {
  const std::size_t b = sentence_begin(k);
  return {tokens_.data() + b, sentence_end(k) - b};
}

std::size_t Side::sentence_of(std::size_t i) const {
  auto it = std::upper_bound(sentence_starts_.begin(), sentence_starts_.end(), i);
  return static_cast<std::size_t>(it - sentence_starts_.begin()) - 1;
}

std::vector<std::string> Side::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_) out.push_back(t.surface);
  return out;
}

void Side::mark_stops(const StopList& stops) {
  for (auto& t : tokens_) t.is_stop = stops.count(t.surface) != 0 || stops.count(to_lower(t.surface)) != 0;
}

// ---------------------------------------------------------------- trees

ParseTree parse_bracketed(std::string_view text) { return BracketReader(trim(text)).read_tree(); }

std::string to_bracketed(const ParseTree& tree) {
  std::string out = "(" + tree.label;
  if (tree.is_preterminal()) return out + " " + *tree.word + ")";
  for (const auto& c : tree.children) out += " " + to_bracketed(c);
  return out + ")";
}

// ---------------------------------------------------------------- hypernyms

void HypernymGraph::add_edge(const std::string& child, const std::string& parent) {
  nodes_.insert(child);
  nodes_.insert(parent);
  auto& ps = parents_[child];
  if (std::find(ps.begin(), ps.end(), parent) == ps.end()) ps.push_back(parent);
}

void HypernymGraph::add_sense(const std::string& lemma, const std::string& synset) {
  nodes_.insert(synset);
  first_sense_.emplace(lemma, synset);  // first record wins
}

void HypernymGraph::validate() const {
  // Iterative DFS with colors; report the cycle on the gray stack.
  enum Color { White, Gray, Black };
  std::map<std::string, Color> color;
  std::vector<std::string> sorted(nodes_.begin(), nodes_.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& n : sorted) color[n] = White;

  for (const auto& root : sorted) {
    if (color[root] != White) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{root, 0}};
    color[root] = Gray;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& ps = parents(node);
      if (next < ps.size()) {
        const std::string p = ps[next++];
        if (color[p] == Gray) {
          std::string witness;
          bool on = false;
          for (const auto& [n, idx] : stack) {
            if (n == p) on = true;
            if (on) witness += n + " -> ";
          }
          throw DataError("hypernym graph has a cycle: " + witness + p);
        }
        if (color[p] == White) {
          color[p] = Gray;
          stack.emplace_back(p, 0);
        }
      } else {
        color[node] = Black;
        stack.pop_back();
      }
    }
  }
}

std::optional<std::string> HypernymGraph::first_sense(const std::string& lemma) const {
  auto it = first_sense_.find(lemma);
  if (it == first_sense_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& HypernymGraph::parents(const std::string& synset) const {
  static const std::vector<std::string> none;
  auto it = parents_.find(synset);
  return it == parents_.end() ? none : it->second;
}

std::map<std::string, int> HypernymGraph::ancestors(const std::string& synset) const {
  std::map<std::string, int> depth{{synset, 0}};
  std::vector<std::string> frontier{synset};
  int d = 0;
  while (!frontier.empty()) {
    ++d;
    std::vector<std::string> next;
    for (const auto& n : frontier) {
      for (const auto& p : parents(n)) {
        if (depth.emplace(p, d).second) next.push_back(p);
      }
    }
    frontier = std::move(next);
  }
  return depth;
}

std::optional<int> HypernymGraph::synset_distance(const std::string& a, const std::string& b) const {
  const auto da = ancestors(a);
  const auto db = ancestors(b);
  std::optional<int> best;
  for (const auto& [node, x] : da) {
    auto it = db.find(node);
    if (it == db.end()) continue;
    const int total = x + it->second;
    if (!best || total < *best) best = total;
  }
  return best;
}

// ---------------------------------------------------------------- pairs

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) out.emplace_back(line.substr(start, pos - start));
  }
  return out;
}

TokenizedPair make_pair(std::string id, const std::vector<std::vector<std::string>>& doc,
                        const std::vector<std::vector<std::string>>& summary, const StopList& stops) {
  TokenizedPair p;
  p.id = std::move(id);
  p.doc = Side(doc);
  p.summary = Side(summary);
  if (p.doc.empty()) throw DataError("pair '" + p.id + "': empty document side");
  if (p.summary.empty()) throw DataError("pair '" + p.id + "': empty summary side");
  p.doc.mark_stops(stops);
  p.summary.mark_stops(stops);
  return p;
}

std::vector<TokenizedPair> parse_pairs(std::string_view jsonl, const StopList& stops, const std::string& source) {
  std::vector<TokenizedPair> pairs;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON record: " + e.what());
    }
    std::string id = "<line " + std::to_string(line_no) + ">";
    if (rec.is_object() && rec.contains("id")) {
      id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    }
    if (!rec.is_object()) throw DataError(where + ": record " + id + " is not an object");
    for (const char* field : {"doc", "summary"}) {
      if (!rec.contains(field)) throw DataError(where + ": record " + id + " is missing '" + field + "'");
    }
    if (!rec.contains("id")) throw DataError(where + ": record " + id + " is missing 'id'");
    try {
      auto doc = side_from_json(rec["doc"]);
      auto sum = side_from_json(rec["summary"]);
      pairs.push_back(make_pair(id, doc, sum, stops));
    } catch (const DataError& e) {
      throw DataError(where + ": record " + id + ": " + e.what());
    }
    if (!seen.insert(id).second) throw DataError(where + ": duplicate pair id " + id);
  }
  return pairs;
}

std::vector<TokenizedPair> load_pairs(const std::filesystem::path& path, const StopList& stops) {
  return parse_pairs(read_file(path, "pairs file"), stops, path.string());
}

void write_pairs(const std::filesystem::path& path, const std::vector<TokenizedPair>& pairs,
                 bool approximate_extract) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& p : pairs) {
    json rec;
    rec["id"] = p.id;
    rec["doc"] = side_to_json(p.doc);
    rec["summary"] = side_to_json(p.summary);
    if (approximate_extract) rec["approximate_extract"] = true;
    out << rec.dump() << '\n';
  }
}

// ---------------------------------------------------------------- stop list

const std::vector<std::string>& default_stoplist_entries() {
  static const std::vector<std::string> entries = {
      "a",     "an",   "the",   "and",   "or",   "but",  "nor",  "of",   "to",   "in",   "on",    "at",
      "by",    "for",  "with",  "from",  "as",   "into", "about", "than", "that", "this", "these", "those",
      "it",    "its",  "is",    "are",   "was",  "were", "be",   "been", "being", "has", "have",  "had",
      "do",    "does", "did",   "will",  "would", "can", "could", "which", "who", "whom", "not",  "'s",
      ".",     ",",    ";",     ":",     "''",   "``",   "(",    ")",    "-",    "--"};
  return entries;
}

StopList default_stoplist() {
  const auto& e = default_stoplist_entries();
  return StopList(e.begin(), e.end());
}

StopList parse_stoplist(std::string_view text) {
  StopList out;
  for (std::string_view line : split_lines(text)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.emplace(line);
  }
  return out;
}

StopList load_stoplist(const std::filesystem::path& path) { return parse_stoplist(read_file(path, "stop list")); }

// ---------------------------------------------------------------- parses

std::map<std::string, std::vector<ParseTree>> parse_parse_file(std::string_view text, const std::string& source) {
  std::map<std::string, std::vector<ParseTree>> out;
  std::vector<ParseTree>* current = nullptr;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("#pair", 0) == 0) {
      const std::string id(trim(line.substr(5)));
      if (id.empty()) throw DataError(source + ":" + std::to_string(line_no) + ": '#pair' header without an id");
      if (out.count(id)) throw DataError(source + ":" + std::to_string(line_no) + ": duplicate parses for " + id);
      current = &out[id];
      continue;
    }
    if (line.front() == '#') continue;
    if (!current) throw DataError(source + ":" + std::to_string(line_no) + ": tree before any '#pair' header");
    try {
      current->push_back(parse_bracketed(line));
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, std::vector<ParseTree>> load_parse_file(const std::filesystem::path& path) {
  return parse_parse_file(read_file(path, "parse file"), path.string());
}

TokenizedPair attach_parses(TokenizedPair pair, std::vector<ParseTree> trees) {
  if (trees.size() != pair.doc.sentence_count()) {
    throw DataError("pair '" + pair.id + "': " + std::to_string(trees.size()) + " parse trees for " +
                    std::to_string(pair.doc.sentence_count()) + " document sentences");
  }
  for (std::size_t k = 0; k < trees.size(); ++k) {
    const auto sent = pair.doc.sentence(k);
    std::vector<std::string> words;
    collect_words(trees[k], words);
    if (words.size() != sent.size()) {
      throw DataError("pair '" + pair.id + "', sentence " + std::to_string(k) + ": tree has " +
                      std::to_string(words.size()) + " leaves but the sentence has " + std::to_string(sent.size()) +
                      " tokens");
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i] != sent[i].surface) {
        throw DataError("pair '" + pair.id + "', sentence " + std::to_string(k) + ": leaf " + std::to_string(i) +
                        " is '" + words[i] + "' but the token is '" + sent[i].surface + "'");
      }
    }
  }
  pair.doc_parses = std::move(trees);
  return pair;
}

TokenizedPair load_parses(const std::filesystem::path& path, TokenizedPair pair) {
  auto all = load_parse_file(path);
  auto it = all.find(pair.id);
  if (it == all.end()) throw DataError("no parses for pair '" + pair.id + "' in " + path.string());
  return attach_parses(std::move(pair), std::move(it->second));
}

void attach_all_parses(std::vector<TokenizedPair>& pairs, const std::map<std::string, std::vector<ParseTree>>& parses) {
  for (auto& p : pairs) {
    auto it = parses.find(p.id);
    if (it == parses.end()) throw DataError("no parses for pair '" + p.id + "'");
    p = attach_parses(std::move(p), it->second);
  }
}

// ---------------------------------------------------------------- graph file

HypernymGraph parse_hypernym_graph(std::string_view text, const std::string& source) {
  HypernymGraph g;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    if (trim(raw).empty() || trim(raw).front() == '#') continue;
    const auto f = split_tabs(raw);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 3 || f[1].empty() || f[2].empty())
      throw DataError(where + ": expected 'E|S<TAB>a<TAB>b', got '" + std::string(raw) + "'");
    if (f[0] == "E") {
      g.add_edge(f[1], f[2]);
    } else if (f[0] == "S") {
      g.add_sense(f[1], f[2]);
    } else {
      throw DataError(where + ": unknown record type '" + f[0] + "'");
    }
  }
  g.validate();
  return g;
}

HypernymGraph load_hypernym_graph(const std::filesystem::path& path) {
  return parse_hypernym_graph(read_file(path, "hypernym graph"), path.string());
}

// ---------------------------------------------------------------- stats

CorpusStats corpus_stats(std::span<const TokenizedPair> pairs) {
  if (pairs.empty()) throw DataError("corpus_stats: empty corpus");
  CorpusStats st;
  st.num_pairs = pairs.size();
  std::unordered_set<std::string> vs, vd, all;
  for (const auto& p : pairs) {
    st.summary.sentences += p.summary.sentence_count();
    st.summary.words += p.summary.size();
    st.doc.sentences += p.doc.sentence_count();
    st.doc.words += p.doc.size();
    for (const auto& t : p.summary.tokens()) {
      vs.insert(t.surface);
      all.insert(t.surface);
    }
    for (const auto& t : p.doc.tokens()) {
      vd.insert(t.surface);
      all.insert(t.surface);
    }
  }
  const double n = static_cast<double>(pairs.size());
  for (auto* side : {&st.summary, &st.doc}) {
    side->sentences_per_doc = static_cast<double>(side->sentences) / n;
    side->words_per_doc = static_cast<double>(side->words) / n;
    side->words_per_sentence =
        side->sentences ? static_cast<double>(side->words) / static_cast<double>(side->sentences) : 0.0;
  }
  st.summary.unique_words = vs.size();
  st.doc.unique_words = vd.size();
  st.unique_words_combined = all.size();
  st.compression_rate = static_cast<double>(st.summary.words) / static_cast<double>(st.doc.words);
  return st;
}

// ---------------------------------------------------------------- extracts

TokenizedPair select_extract(const TokenizedPair& pair, std::size_t k) {
  if (k == 0) throw DataError("select_extract: k must be at least 1");
  const std::size_t ns = pair.doc.sentence_count();
  std::vector<std::set<std::string>> doc_stems(ns);
  for (std::size_t d = 0; d < ns; ++d) {
    for (const auto& t : pair.doc.sentence(d)) doc_stems[d].insert(t.stem);
  }
  std::vector<bool> keep(ns, false);
  for (std::size_t s = 0; s < pair.summary.sentence_count(); ++s) {
    std::set<std::string> ss;
    for (const auto& t : pair.summary.sentence(s)) ss.insert(t.stem);
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (overlap, sentence)
    for (std::size_t d = 0; d < ns; ++d) {
      std::size_t overlap = 0;
      for (const auto& st : ss) overlap += doc_stems[d].count(st);
      scored.emplace_back(overlap, d);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t r = 0; r < std::min(k, scored.size()); ++r) keep[scored[r].second] = true;
  }
  std::vector<std::vector<std::string>> doc;
  std::vector<ParseTree> trees;
  const auto all = side_sentences(pair.doc);
  for (std::size_t d = 0; d < ns; ++d) {
    if (!keep[d]) continue;
    doc.push_back(all[d]);
    if (pair.doc_parses) trees.push_back((*pair.doc_parses)[d]);
  }
  TokenizedPair out;
  out.id = pair.id;
  out.doc = Side(doc);
  out.summary = pair.summary;
  // Carry stop flags over from the source pair.
  StopList stops;
  for (const auto& t : pair.doc.tokens())
    if (t.is_stop) stops.insert(t.surface);
  for (const auto& t : pair.summary.tokens())
    if (t.is_stop) stops.insert(t.surface);
  out.doc.mark_stops(stops);
  if (pair.doc_parses) out.doc_parses = std::move(trees);
  return out;
}

}  // namespace sumalign
