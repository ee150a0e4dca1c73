#pragma once

#include <cstdint>
#include <vector>

#include "sumalign/alignment.hpp"
#include "sumalign/corpus.hpp"
#include "sumalign/jump.hpp"
#include "sumalign/logmath.hpp"
#include "sumalign/rewrite.hpp"
#include "sumalign/state_space.hpp"

namespace sumalign {

// Every log-probability the trellis needs for one pair. Phrase emissions are
// indexed by phrase index k (= state id - 1), summary start t (0-based) and
// length; the summary has N real tokens followed by the end marker.
struct PairScores {
  StateSpace ss;
  int N = 0;
  int max_len = 1;
  PairJumpTable jump;
  std::vector<double> emit;
  std::vector<double> null_emit;

  std::size_t index(int k, int t, int len) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(N) + static_cast<std::size_t>(t)) *
               static_cast<std::size_t>(max_len) +
           static_cast<std::size_t>(len - 1);
  }
  double e(int k, int t, int len) const { return emit[index(k, t, len)]; }
};

PairScores make_scores(const StateSpace& ss, int summary_len, int max_summary_phrase_len, PairJumpTable jump,
                       const PairRewriteTable& rewrite);
PairScores score_pair(const TokenizedPair& pair, const JumpModel& jump, const JumpGeometry& geometry,
                      const RewriteModel& rewrite, PairRewriteTable* table_out = nullptr);

// Boundaries t = 0..N count the summary tokens consumed so far; alpha(t, x)
// is the log mass of prefixes whose last segment, generated by x, ends at t.
// beta depends on the source only through its anchor.
struct Trellis {
  int N = 0;
  int states = 0;
  int n = 0;
  std::vector<double> alpha;        // (N+1) x states
  std::vector<double> anchor_mass;  // (N+1) x (n+1): log-sum of alpha over live states with anchor p
  std::vector<double> into_phrase;  // (N+1) x (n+2): log mass entering phrases starting at j
  std::vector<double> into_null;    // (N+1) x (n+2)
  std::vector<double> beta;         // (N+1) x (n+1), by anchor
  std::vector<double> out_phrase;   // N x (n+2): emission + future for phrases starting at j
  std::vector<double> out_null;     // N x (n+2)
  std::vector<std::uint8_t> alive;  // (N+1) x states, empty when nothing was pruned
  double total_loglik = kNegInf;
  double beta_total = kNegInf;
  bool has_beta = false;
  std::uint64_t ops = 0;

  bool alignable() const;
  bool is_alive(int t, int x) const;
  double alpha_at(int t, int x) const { return alpha[static_cast<std::size_t>(t) * static_cast<std::size_t>(states) + x]; }
  double beta_at(const StateSpace& ss, int t, int x) const;
};

// beam_fraction in (0, 1]; 1 disables pruning entirely.
Trellis forward(const PairScores& scores, double beam_fraction = 1.0);
void backward(const PairScores& scores, Trellis& trellis);

struct Segment {
  int state = 0;
  int t_begin = 0;  // 0-based, inclusive
  int t_end = 0;    // exclusive
};

struct ViterbiResult {
  bool alignable = false;
  double best_loglik = 0.0;
  std::vector<Segment> segments;
  std::uint64_t ops = 0;
};

ViterbiResult viterbi(const PairScores& scores, double beam_fraction = 1.0);
AlignmentSet segments_to_alignment(const std::string& pair_id, const StateSpace& ss,
                                   const std::vector<Segment>& segments);
// Throws UnalignableError when no path has positive probability.
std::pair<AlignmentSet, double> viterbi_decode(const TokenizedPair& pair, const PairScores& scores,
                                               double beam_fraction = 1.0);

// Posterior mass of each emission event.
struct Posteriors {
  std::vector<double> phrase;  // same indexing as PairScores::emit
  std::vector<double> null;    // N x (n+1): (t, anchor)
  std::vector<double> null_by_t;
  std::vector<double> jump_phrase;  // (n+1) x (n+2)
  std::vector<double> jump_null;    // (n+1) x (n+2)
  double segments = 0.0;            // expected number of emitting segments
};

Posteriors posteriors(const PairScores& scores, const Trellis& trellis);

// tau for one transition: source y at boundary t0 into target x emitting
// summary tokens t0 .. t1-1 (End consumes only the marker, t1 = N + 1).
struct Transition {
  int from = 0;
  int to = 0;
  int t0 = 0;
  int t1 = 0;
  double tau = 0.0;
};
std::vector<Transition> transition_posteriors(const PairScores& scores, const Trellis& trellis);

struct ExpectedCounts {
  PairJumpCounts jump;
  RewriteCounts rewrite;
  double segments = 0.0;
  double loglik = 0.0;
};

ExpectedCounts expected_counts(const PairScores& scores, const Trellis& trellis, const JumpGeometry& geometry,
                               const RewriteModel& rewrite, const PairRewriteTable& table);

}  // namespace sumalign
