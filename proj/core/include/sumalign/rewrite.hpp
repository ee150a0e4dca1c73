#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sumalign/corpus.hpp"
#include "sumalign/state_space.hpp"

namespace sumalign {

// The end-of-summary marker. It is emitted structurally on the transition
// into End and is never scored by a rewrite model.
inline constexpr const char* kOmega = "<omega>";

enum Submodel : int { kIdentity = 0, kStem = 1, kWordNet = 2, kLexical = 3 };
inline constexpr std::size_t kSubmodels = 4;

struct PriorSpec {
  double singleton_fake = 2.0;
  double lexical_identity_fake = 4.0;
  double stem_identity_fake = 3.0;

  static PriorSpec none() { return {0.0, 0.0, 0.0}; }
};

// Dirichlet pseudo-count for the t-table entry (d -> s).
double fake_count(const PriorSpec& prior, const std::vector<std::string>& s, const std::vector<std::string>& d);

std::string phrase_key(std::span<const std::string> words);
std::vector<std::string> split_phrase(const std::string& key);
// Collocation lemma used for hypernym lookups: lowercase, '_'-joined.
std::string wn_lemma(std::span<const std::string> words);

struct RewriteOptions {
  int max_doc_phrase_len = 5;
  int max_summary_phrase_len = 5;
  std::array<double, kSubmodels> lambdas{0.25, 0.25, 0.25, 0.25};
  double eta = 1.0;
  double eta_min = 1e-3;
  double eta_max = 20.0;
  double eta_tol = 1e-6;
  double null_smoothing = 0.5;
  PriorSpec prior;
};

// Weighted submodel terms lambda_k * P_k(s | d) for every (doc phrase state,
// summary span) of one pair, plus the null-emission probabilities.
struct PairRewriteTable {
  int phrases = 0;
  int summary_len = 0;
  int max_len = 0;
  std::vector<std::array<double, kSubmodels>> terms;
  std::vector<int> wn_dist;  // -1 when infinite
  std::vector<int> doc_ids;  // per phrase state; -1 when unknown to the model
  std::vector<int> sum_ids;  // per (t, len); -1 when unknown
  std::vector<double> null_prob;
  std::vector<std::string> null_words;

  std::size_t index(int phrase, int t, int len) const {
    return (static_cast<std::size_t>(phrase) * static_cast<std::size_t>(summary_len) + static_cast<std::size_t>(t)) *
               static_cast<std::size_t>(max_len) +
           static_cast<std::size_t>(len - 1);
  }
  double prob(int phrase, int t, int len) const;
};

// Sufficient statistics for the rewrite M-step. Keys are model phrase ids.
struct RewriteCounts {
  std::unordered_map<std::uint64_t, double> lexical;  // (doc id, summary id) -> membership mass
  std::array<double, kSubmodels> membership{};
  std::map<std::pair<int, int>, double> wn;  // (doc id, distance) -> membership mass
  std::map<std::string, double> null_emissions;
  double emissions = 0.0;

  void add(const RewriteCounts& other);
};

inline std::uint64_t entry_key(int d, int s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(d)) << 32) | static_cast<std::uint32_t>(s);
}

class RewriteModel {
 public:
  RewriteModel() = default;

  // Support: every doc phrase x summary phrase pair that co-occurs in a pair,
  // the corpus vocabulary for stem normalisers, and the summary phrases found
  // in the graph for hypernym normalisers. Rows start at (1 + fake) / sum.
  static RewriteModel initialize(std::span<const TokenizedPair> pairs, const RewriteOptions& opts,
                                 std::shared_ptr<const HypernymGraph> graph = nullptr);

  const RewriteOptions& options() const { return opts_; }
  const std::array<double, kSubmodels>& lambdas() const { return lambdas_; }
  void set_lambdas(const std::array<double, kSubmodels>& l) { lambdas_ = l; }
  double eta() const { return eta_; }
  void set_eta(double eta);
  const PriorSpec& prior() const { return opts_.prior; }
  void set_graph(std::shared_ptr<const HypernymGraph> graph);
  const HypernymGraph* graph() const { return graph_.get(); }

  // Submodels over word sequences.
  double id_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const;
  double stem_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const;
  double stem_norm(const std::vector<std::string>& d) const;
  std::optional<int> wn_distance(const std::vector<std::string>& s, const std::vector<std::string>& d) const;
  double wn_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const;
  double wn_norm(const std::vector<std::string>& d) const;
  double lexical_prob(const std::vector<std::string>& s, const std::vector<std::string>& d) const;
  double null_prob(const std::string& word) const;
  double rewrite_logprob(const std::vector<std::string>& s, const std::vector<std::string>& d) const;
  double null_logprob(const std::vector<std::string>& s) const;

  PairRewriteTable score_pair(const TokenizedPair& pair, const StateSpace& ss) const;
  void accumulate(const PairRewriteTable& table, std::span<const double> phrase_posteriors,
                  std::span<const double> null_posteriors, RewriteCounts& out) const;

  // M-steps.
  void reestimate_ttable(const RewriteCounts& counts);
  void reestimate_null(const RewriteCounts& counts);
  static std::array<double, kSubmodels> reestimate_lambdas(const std::array<double, kSubmodels>& membership);
  double eta_objective(const std::map<std::pair<int, int>, double>& wn_counts, double eta) const;
  double estimate_eta(const std::map<std::pair<int, int>, double>& wn_counts) const;
  void reestimate(const RewriteCounts& counts);

  // sum f * log b over t-table entries + null smoothing * sum log P_null.
  double log_prior() const;
  // Expected complete-data log-likelihood of the rewrite counts.
  double expected_loglik(const RewriteCounts& counts) const;

  // Inspection.
  std::size_t ttable_size() const { return entries_.size(); }
  std::size_t phrase_count() const { return keys_.size(); }
  int phrase_id(const std::string& key) const;
  const std::string& phrase(int id) const { return keys_[static_cast<std::size_t>(id)]; }
  std::optional<double> ttable_entry(const std::string& d, const std::string& s) const;
  std::optional<double> entry_fake(const std::string& d, const std::string& s) const;
  std::vector<std::pair<std::string, double>> ttable_row(const std::string& d) const;
  void set_ttable_entry(const std::string& d, const std::string& s, double value);
  const std::vector<std::string>& summary_vocab() const { return null_vocab_; }
  const std::vector<std::string>& wn_support() const { return wn_support_; }

  void write(std::ostream& out) const;
  static RewriteModel read(std::istream& in, std::shared_ptr<const HypernymGraph> graph,
                           const std::string& source = "<stream>");
  void save(const std::filesystem::path& path) const;
  static RewriteModel load(const std::filesystem::path& path, std::shared_ptr<const HypernymGraph> graph);

 private:
  struct Entry {
    int d;
    int s;
    double prob;
    double fake;
  };
  struct PhraseMeta {
    int length = 0;
    std::string stem_key;
    double stem_norm = 1.0;
    std::optional<std::string> synset;
  };

  void build_index(std::vector<std::string> keys, std::vector<std::uint64_t> pairs);
  void build_norms();
  PhraseMeta make_meta(const std::vector<std::string>& words) const;
  double stem_norm_words(const std::vector<std::string>& words) const;
  double wn_norm_for(int id, const std::optional<std::string>& synset, const std::string& key, double eta) const;
  double log_wn_norm_for(int id, const std::optional<std::string>& synset, const std::string& key, double eta) const;
  std::vector<std::pair<int, double>> wn_hist_for(const std::string& synset) const;
  std::optional<int> distance_between(const std::string& a, const std::string& b) const;
  std::array<double, kSubmodels> terms(const std::string& s_key, const PhraseMeta& s, int s_id,
                                       const std::string& d_key, const PhraseMeta& d, int d_id, double d_wn_norm,
                                       int* dist_out) const;

  RewriteOptions opts_;
  std::array<double, kSubmodels> lambdas_{0.25, 0.25, 0.25, 0.25};
  double eta_ = 1.0;
  std::shared_ptr<const HypernymGraph> graph_;

  std::vector<std::string> keys_;  // sorted phrase keys; index = phrase id
  std::unordered_map<std::string, int> key_index_;
  std::vector<PhraseMeta> meta_;
  std::vector<Entry> entries_;  // sorted by (d, s)
  std::unordered_map<std::uint64_t, std::size_t> entry_index_;
  std::vector<std::pair<std::size_t, std::size_t>> rows_;  // [begin, end) into entries_

  std::vector<std::string> vocab_;  // every surface in the corpus, sorted
  std::unordered_map<std::string, int> stem_counts_;
  std::vector<std::string> null_vocab_;  // summary surfaces, sorted
  std::unordered_map<std::string, double> null_table_;
  std::vector<std::string> wn_support_;  // summary phrase keys found in the graph
  std::vector<std::optional<std::string>> wn_support_synsets_;
  std::unordered_map<int, std::vector<std::pair<int, double>>> wn_hist_;  // doc phrase id -> (dist, count)
};

}  // namespace sumalign
