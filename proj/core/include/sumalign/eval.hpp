#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sumalign/alignment.hpp"
#include "sumalign/corpus.hpp"

namespace sumalign {

inline constexpr int kNullWord = -1;

// (doc index or kNullWord, summary index).
using WordPair = std::pair<int, int>;
using WordPairSet = std::set<WordPair>;

// All-pairs expansion: the Cartesian product of each span's doc and summary
// ranges; null spans give (kNullWord, t).
WordPairSet expand_all_pairs(std::span<const AlignmentSpan> spans);
// Sure (or Sure + Possible) word pairs, null pairs excluded.
WordPairSet sure_pairs(const AlignmentSet& gold);
WordPairSet possible_pairs(const AlignmentSet& gold);

// Hypothesis word pairs under the soft rule: a span with equal-length sides
// whose diagonal word pairs are all possible contributes only its products
// that are possible. Other spans contribute every product. Null pairs are
// dropped.
WordPairSet soft_hypothesis_pairs(const AlignmentSet& hyp, const WordPairSet& possible);

struct PairCounts {
  std::size_t hyp = 0;           // |A|
  std::size_t hyp_possible = 0;  // |A n P|
  std::size_t soft_hyp = 0;
  std::size_t soft_hyp_possible = 0;
  std::size_t sure = 0;          // |S|
  std::size_t hyp_sure = 0;      // |A n S|

  void add(const PairCounts& o);
};

// Optional filter dropping word pairs whose doc or summary token is excluded.
struct WordFilter {
  std::vector<bool> doc_keep;
  std::vector<bool> sum_keep;
  bool keeps(const WordPair& p) const;
};

PairCounts count_pairs(const AlignmentSet& hyp, const AlignmentSet& gold, const WordFilter* filter = nullptr);

// Empty hypotheses score precision 1.
double soft_precision(const AlignmentSet& hyp, const AlignmentSet& gold);
double strict_precision(const AlignmentSet& hyp, const AlignmentSet& gold);
// nullopt when the gold has no sure pairs.
std::optional<double> recall(const AlignmentSet& hyp, const AlignmentSet& gold);
double f_score(double precision, double recall);

struct MetricSection {
  double soft_precision = 1.0;
  double strict_precision = 1.0;
  double recall = 0.0;
  double soft_fscore = 0.0;
  PairCounts counts;
  bool empty_hypothesis = false;  // precision defined as 1 with zero weight
  bool recall_undefined = false;  // no sure pairs
};

struct EvalReport {
  std::size_t pairs = 0;
  MetricSection all_words;
  MetricSection non_stop;
  std::vector<std::string> flags;
};

MetricSection section_from_counts(const PairCounts& c);

// Micro-averaged over pairs. `pairs` supplies tokens for the ignore-list
// variant; gold pairs missing from the hypothesis count as empty only when
// the hypothesis lists them as unalignable.
EvalReport evaluate(const AlignmentCorpus& hyp, const AlignmentCorpus& gold, std::span<const TokenizedPair> pairs,
                    const StopList& stops);
std::string eval_report_json(const EvalReport& report);

// Two raters, two categories.
struct Contingency {
  double yes_yes = 0, yes_no = 0, no_yes = 0, no_no = 0;
};
std::optional<double> kappa(const Contingency& c);
Contingency contingency(const WordPairSet& a, const WordPairSet& b, std::size_t universe_size);
std::optional<double> kappa(const WordPairSet& a, const WordPairSet& b, std::size_t universe_size);

struct AgreementReport {
  std::optional<double> sure_all;
  std::optional<double> sure_non_stop;
  std::optional<double> possible_all;
  std::optional<double> possible_non_stop;
  std::size_t universe_all = 0;
  std::size_t universe_non_stop = 0;
  std::size_t pairs = 0;
};
// Universe: every doc-token x summary-token pair of each annotated pair.
AgreementReport agreement(const AlignmentCorpus& a, const AlignmentCorpus& b, std::span<const TokenizedPair> pairs,
                          const StopList& stops);
std::string agreement_json(const AgreementReport& report);

// Summary tokens the gold leaves null-generated become null in the hypothesis.
AlignmentSet oracle_null_project(const AlignmentSet& hyp, const AlignmentSet& gold);
AlignmentCorpus oracle_null_project(const AlignmentCorpus& hyp, const AlignmentCorpus& gold);

// Greedy longest stem-identical block alignment; blocks shorter than
// min_block are ignored. Output spans are diagonal singletons.
AlignmentSet cutpaste_align(const TokenizedPair& pair, int min_block);

struct Model1 {
  std::map<std::pair<std::string, std::string>, double> t;  // (doc word, summary word) -> prob
  double prob(const std::string& d, const std::string& s) const;
};
inline constexpr const char* kNullSource = "<null>";
// Document side as source plus a null source word; the corpus is extended
// with one identity pair per vocabulary word before training.
Model1 train_model1(std::span<const TokenizedPair> corpus, int iterations);
AlignmentSet model1_align_pair(const Model1& model, const TokenizedPair& pair);
std::vector<AlignmentSet> model1_align(std::span<const TokenizedPair> corpus, int iterations);

// Corpus findings reported over an annotated corpus.
struct AlignmentStats {
  std::size_t summary_words = 0;
  std::size_t unaligned_summary_words = 0;  // null or uncovered
  std::size_t spans = 0;                    // non-null
  std::size_t identical_spans = 0;
  std::size_t stem_identical_spans = 0;
  std::size_t singleton_spans = 0;
  double unaligned_rate() const;
  double identical_rate() const;
  double stem_identical_rate() const;
  double singleton_rate() const;
};
AlignmentStats alignment_stats(const AlignmentCorpus& alignments, std::span<const TokenizedPair> pairs,
                               bool sure_only = true);
std::string alignment_stats_json(const AlignmentStats& stats);

}  // namespace sumalign
