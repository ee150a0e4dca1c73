#include "sumalign/state_space.hpp"

#include <algorithm>

#include "sumalign/error.hpp"

namespace sumalign {

std::string to_string(const State& s) {
  switch (s.kind) {
    case StateKind::Start:
      return "<start>";
    case StateKind::End:
      return "<end>";
    case StateKind::Null:
      return "r(null," + std::to_string(s.i) + ")";
    case StateKind::Phrase:
      return "r(" + std::to_string(s.i) + "," + std::to_string(s.i_end) + ")";
  }
  return "?";
}

StateSpace::StateSpace(int doc_len, int max_doc_phrase_len) : n_(doc_len), max_len_(max_doc_phrase_len) {
  if (doc_len < 1) throw DataError("state space needs a document of at least one token");
  if (max_doc_phrase_len < 1) throw DataError("max_doc_phrase_len must be at least 1");
  states_.push_back({StateKind::Start, 0, 0});
  phrase_offset_.assign(static_cast<std::size_t>(n_ + 2), 0);
  for (int i = 1; i <= n_; ++i) {
    phrase_offset_[static_cast<std::size_t>(i)] = static_cast<int>(states_.size());
    for (int e = i; e <= std::min(n_, i + max_len_ - 1); ++e) states_.push_back({StateKind::Phrase, i, e});
  }
  phrase_offset_[static_cast<std::size_t>(n_ + 1)] = static_cast<int>(states_.size());
  phrase_count_ = static_cast<int>(states_.size()) - 1;
  for (int a = 1; a <= n_; ++a) states_.push_back({StateKind::Null, a, a});
  states_.push_back({StateKind::End, n_ + 1, n_ + 1});
}

StateSpace build_state_space(int doc_len, int max_doc_phrase_len) { return StateSpace(doc_len, max_doc_phrase_len); }

int StateSpace::phrase_id(int i, int i_end) const {
  if (i < 1 || i > n_ || i_end < i || i_end > n_ || i_end - i + 1 > max_len_) return -1;
  return phrase_offset_[static_cast<std::size_t>(i)] + (i_end - i);
}

int StateSpace::phrases_starting_at(int i) const { return std::min(max_len_, n_ - i + 1); }

int StateSpace::anchor(int id) const {
  const State& s = state(id);
  switch (s.kind) {
    case StateKind::Start:
      return 0;
    case StateKind::Phrase:
      return s.i_end;
    case StateKind::Null:
      return s.i;
    case StateKind::End:
      return n_ + 1;
  }
  return 0;
}

bool StateSpace::is_legal(int from, int to) const {
  if (from < 0 || to < 0 || from >= size() || to >= size()) return false;
  if (from == end_id()) return false;
  if (to == start_id()) return false;
  // The summary is never empty, so Start cannot go straight to End.
  if (from == start_id() && to == end_id()) return false;
  return true;
}

std::vector<int> StateSpace::successors(int id) const {
  std::vector<int> out;
  if (id == end_id()) return out;
  for (int to = 1; to < size(); ++to) {
    if (is_legal(id, to)) out.push_back(to);
  }
  return out;
}

int StateSpace::max_out_degree() const { return size() - 1; }

}  // namespace sumalign
