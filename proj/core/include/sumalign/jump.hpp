#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sumalign/corpus.hpp"
#include "sumalign/state_space.hpp"

namespace sumalign {

enum class JumpKind { Relative, Gaussian, Syntax };

std::string to_string(JumpKind kind);
JumpKind parse_jump_kind(const std::string& name);

// Directed constituent tags jumped over between anchor p and target j (both
// 1-based; p = 0 is Start, j = n + 1 is End). Forward jumps cover tokens
// p+1 .. j-1 with "-f" tags; backward jumps (j <= p) cover j .. p with "-b".
std::vector<std::string> syntax_jump_tags(const std::vector<ParseTree>& forest, const Side& doc, int from_pos,
                                          int to_pos);

// Per-document facts the jump model needs: length, phrase bound and, for the
// syntax model, the tag path of every (anchor, target) jump.
struct JumpGeometry {
  int n = 0;
  int max_doc_phrase_len = 1;
  std::vector<std::vector<int>> paths;  // (n+1) x (n+2), tag ids; -1 = unknown tag

  std::size_t cell(int p, int j) const { return static_cast<std::size_t>(p) * static_cast<std::size_t>(n + 2) + j; }
  // Number of targets starting at position j (phrases of each length, or End).
  int multiplicity(int p, int j) const;
};

// Log-space transition pieces for one document. Every source state is
// summarised by its anchor p; targets are phrase start positions j (End is
// j = n + 1) or null positions.
struct PairJumpTable {
  int n = 0;
  std::vector<double> log_w;  // (n+1) x (n+2), unnormalised weights
  std::vector<double> log_znn;
  std::vector<double> log_znull;
  double log_nu = 0.0;
  double log_one_minus_nu = 0.0;

  double lw(int p, int j) const { return log_w[static_cast<std::size_t>(p) * static_cast<std::size_t>(n + 2) + j]; }
  double to_phrase(int p, int j) const { return log_one_minus_nu + lw(p, j) - log_znn[static_cast<std::size_t>(p)]; }
  double to_null(int p, int j) const { return log_nu + lw(p, j) - log_znull[static_cast<std::size_t>(p)]; }
};

class JumpModel {
 public:
  // Uniform distance table over [-window, window].
  static JumpModel relative(int window, double null_prob);
  static JumpModel gaussian(double mu, double sigma2, double null_prob);
  // Uniform over the directed tag inventory.
  static JumpModel syntax(std::vector<std::string> directed_tags, double null_prob);
  // Directed inventory (X-f and X-b for every label) from the parses.
  static std::vector<std::string> tag_inventory(std::span<const TokenizedPair> pairs);

  JumpKind kind() const { return kind_; }
  double null_prob() const { return null_; }
  void set_null_prob(double v) { null_ = v; }

  int window() const { return window_; }
  // Table entry jump_rel(d); entries sum to 1 - null_prob.
  double rel(int d) const;
  const std::vector<double>& rel_table() const { return rel_; }
  void set_rel_table(std::vector<double> table);

  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }

  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<double>& tag_probs() const { return tag_probs_; }
  void set_tag_probs(std::vector<double> probs);
  int tag_id(const std::string& tag) const;
  double tag_prob(const std::string& tag) const;

  JumpGeometry geometry(const TokenizedPair& pair, int max_doc_phrase_len) const;
  // Unnormalised log weight of a jump from anchor p to target position j.
  double log_weight(const JumpGeometry& g, int p, int j) const;
  PairJumpTable table(const JumpGeometry& g) const;

 private:
  JumpKind kind_ = JumpKind::Relative;
  double null_ = 0.1;
  int window_ = 0;
  std::vector<double> rel_;
  double mu_ = 1.0;
  double sigma2_ = 1.0;
  std::vector<std::string> tags_;
  std::vector<double> tag_probs_;
  std::unordered_map<std::string, int> tag_index_;
};

// Normalised log jump(to | from).
double jump_logprob(const JumpModel& model, const StateSpace& ss, int from, int to, const JumpGeometry& g);
// The raw factor the decomposition assigns before per-source normalisation:
// jump_rel(d) for phrase/End targets, jump_rel(null) * jump_rel(d) for null
// targets (likewise for the Gaussian weight and tag products).
double table_factor(const JumpModel& model, const StateSpace& ss, int from, int to, const JumpGeometry& g);

struct PairJumpCounts {
  const JumpGeometry* geometry = nullptr;
  std::vector<double> to_phrase;  // (n+1) x (n+2), summed over phrase lengths
  std::vector<double> to_null;    // (n+1) x (n+2)

  void add(const PairJumpCounts& other);
  double total() const;
};

struct JumpEstimateOptions {
  double smoothing = 0.5;
  double sigma2_floor = 0.25;
  double null_floor = 1e-6;
  int inner_iterations = 10;
};

// Expected complete-data log-likelihood of the counts under a model.
double jump_expected_loglik(const JumpModel& model, std::span<const PairJumpCounts> counts);
// Log prior matching the smoothing pseudo-counts (relative and syntax kinds).
double jump_log_prior(const JumpModel& model, const JumpEstimateOptions& opts);

// M-step. Never lowers jump_expected_loglik + jump_log_prior below the value
// at `current`.
JumpModel reestimate(const JumpModel& current, std::span<const PairJumpCounts> counts, const JumpEstimateOptions& opts);

// Plain relative-frequency estimators over pooled event counts.
JumpModel relative_from_counts(const std::map<int, double>& distance_counts, double null_mass, int window,
                               double smoothing);
JumpModel gaussian_from_counts(const std::map<int, double>& distance_counts, double null_mass, double sigma2_floor);
JumpModel syntax_from_counts(const std::map<std::string, double>& tag_counts, double null_mass,
                             std::vector<std::string> directed_tags, double smoothing);

void write_jump_model(std::ostream& out, const JumpModel& model);
JumpModel read_jump_model(std::istream& in, const std::string& source = "<stream>");
void save_jump_model(const std::filesystem::path& path, const JumpModel& model);
JumpModel load_jump_model(const std::filesystem::path& path);

}  // namespace sumalign
