#pragma once

// Exhaustive path enumeration over tiny instances. Everything here scores
// paths through the per-state query functions (jump_logprob, rewrite_logprob,
// null_logprob), never through the trellis tables.

#include <map>
#include <memory>
#include <random>
#include <tuple>
#include <vector>

#include "sumalign/corpus.hpp"
#include "sumalign/jump.hpp"
#include "sumalign/rewrite.hpp"
#include "sumalign/semimarkov.hpp"
#include "sumalign/state_space.hpp"

namespace oracle {

struct Instance {
  sumalign::TokenizedPair pair;
  std::shared_ptr<sumalign::HypernymGraph> graph;
  sumalign::JumpModel jump;
  sumalign::RewriteModel rewrite;
  sumalign::JumpGeometry geometry;
  sumalign::StateSpace ss;

  sumalign::PairScores scores() const;
};

using TransitionKey = std::tuple<int, int, int, int>;  // from, to, t0, t1

struct Result {
  double log_total = sumalign::kNegInf;
  double best = sumalign::kNegInf;
  double second_best = sumalign::kNegInf;
  std::vector<sumalign::Segment> best_path;
  std::map<TransitionKey, double> tau;
  double expected_segments = 0.0;
  std::vector<double> boundary;  // P(a segment ends at boundary t), t = 0..N
  std::size_t paths = 0;
};

Result enumerate(const Instance& inst);

// The graph used by random instances: dog -> canine -> animal,
// cat -> feline -> animal.
std::shared_ptr<sumalign::HypernymGraph> toy_graph();

// doc <= 4 tokens, summary <= 3 tokens, both phrase bounds <= 2, random
// normalised parameters for the requested jump kind.
Instance random_instance(std::mt19937_64& rng, sumalign::JumpKind kind);

// Deterministic instance with explicit words and uniform parameters.
Instance make_instance(const std::vector<std::string>& doc, const std::vector<std::string>& summary,
                       int max_doc_phrase_len, int max_summary_phrase_len,
                       sumalign::JumpKind kind = sumalign::JumpKind::Relative);

}  // namespace oracle
