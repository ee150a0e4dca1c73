#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sumalign/corpus.hpp"
#include "sumalign/jump.hpp"
#include "sumalign/rewrite.hpp"

namespace sumalign {

struct TrainConfig {
  JumpKind jump_kind = JumpKind::Relative;
  int iterations = 10;
  double beam_fraction = 1.0;
  int max_doc_phrase_len = 5;
  int max_summary_phrase_len = 5;
  PriorSpec prior;
  // Stop early once an iteration gains less than this; 0 runs every iteration.
  double convergence_tol = 0.0;
  std::uint64_t seed = 0;  // reserved; nothing in training is randomised
  int workers = 1;
  double initial_null_prob = 0.1;
  JumpEstimateOptions jump_options;
  double null_smoothing = 0.5;
  // Directory for iter_<k>/ checkpoints; empty disables checkpointing.
  std::filesystem::path checkpoint_dir;
  bool resume = false;

  void validate() const;
};

struct Models {
  JumpModel jump;
  RewriteModel rewrite;
};

// Objective and bookkeeping at parameters theta_k (k = 0 is the initial guess).
struct IterationRecord {
  int iteration = 0;
  double loglik = 0.0;
  double log_prior = 0.0;
  double objective = 0.0;
  std::size_t alignable = 0;
  std::size_t unalignable = 0;
  double expected_segments = 0.0;
};

struct TrainReport {
  std::vector<IterationRecord> iterations;
  std::vector<std::string> unalignable_ids;  // at the final parameters
  bool converged = false;
  int resumed_from = -1;
  double wall_seconds = 0.0;  // kept out of every written file
};

RewriteOptions rewrite_options(const TrainConfig& config);

Models init_params(std::span<const TokenizedPair> corpus, const TrainConfig& config,
                   std::shared_ptr<const HypernymGraph> graph = nullptr);

// Pair-level E-step result, kept per pair so merges can run in a fixed order.
struct PairEStep {
  bool alignable = false;
  double loglik = 0.0;
  double segments = 0.0;
  PairJumpCounts jump;
  RewriteCounts rewrite;
};

struct EStepResult {
  std::vector<PairJumpCounts> jump;  // alignable pairs, corpus order
  RewriteCounts rewrite;
  double loglik = 0.0;
  double segments = 0.0;
  std::size_t alignable = 0;
  std::vector<std::string> unalignable_ids;
};

// Runs forward-backward on every pair with `workers` threads; results are
// merged in sorted pair-id order regardless of scheduling.
EStepResult e_step(std::span<const TokenizedPair> corpus, std::span<const JumpGeometry> geometries,
                   const Models& models, double beam_fraction, int workers, bool with_counts = true);

// Sum of log p(s | d) over alignable pairs plus the log Dirichlet densities of
// the t-table and null table (and the jump smoothing prior), constants dropped.
double map_objective(std::span<const TokenizedPair> corpus, const Models& models, const TrainConfig& config);
double log_prior(const Models& models, const TrainConfig& config);

std::pair<Models, TrainReport> em_train(std::span<const TokenizedPair> corpus, const TrainConfig& config,
                                        std::shared_ptr<const HypernymGraph> graph = nullptr);

std::string report_json(const TrainReport& report, const TrainConfig& config);
void save_checkpoint(const std::filesystem::path& dir, const Models& models, const TrainReport& report,
                     const TrainConfig& config);
// Latest iter_<k> directory holding all three files, if any.
std::optional<int> latest_checkpoint(const std::filesystem::path& dir);
Models load_models(const std::filesystem::path& iter_dir, std::shared_ptr<const HypernymGraph> graph);
TrainReport load_report(const std::filesystem::path& iter_dir);

}  // namespace sumalign
