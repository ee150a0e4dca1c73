#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sumalign {

enum class StateKind { Start, Phrase, Null, End };

// Document positions are 1-based here, matching the model's notation; data
// files use 0-based token indices.
struct State {
  StateKind kind = StateKind::Start;
  int i = 0;      // phrase start, or the remembered position of a null state
  int i_end = 0;  // phrase end (== i for null states)

  bool operator==(const State&) const = default;
};

std::string to_string(const State& s);

// Ids: Start = 0, phrases ordered by (i, i_end), then null states by anchor,
// End last.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(int doc_len, int max_doc_phrase_len);

  int doc_len() const { return n_; }
  int max_doc_phrase_len() const { return max_len_; }
  int size() const { return static_cast<int>(states_.size()); }
  const State& state(int id) const { return states_[static_cast<std::size_t>(id)]; }
  const std::vector<State>& states() const { return states_; }

  int start_id() const { return 0; }
  int end_id() const { return size() - 1; }
  int phrase_count() const { return phrase_count_; }
  int first_null_id() const { return 1 + phrase_count_; }
  int null_id(int anchor) const { return first_null_id() + anchor - 1; }
  // -1 when (i, i_end) violates the bounds.
  int phrase_id(int i, int i_end) const;
  // Number of phrase states beginning at i.
  int phrases_starting_at(int i) const;

  // Position the next jump is measured from: 0 for Start, i_end for a phrase,
  // the remembered position for a null state, n + 1 for End.
  int anchor(int id) const;
  bool is_legal(int from, int to) const;
  std::vector<int> successors(int id) const;
  // Largest successor-list length (b).
  int max_out_degree() const;

 private:
  int n_ = 0;
  int max_len_ = 0;
  int phrase_count_ = 0;
  std::vector<State> states_;
  std::vector<int> phrase_offset_;  // first phrase id for each start position
};

StateSpace build_state_space(int doc_len, int max_doc_phrase_len);

}  // namespace sumalign
