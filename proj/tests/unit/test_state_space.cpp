#include "doctest.h"
#include "sumalign/error.hpp"
#include "sumalign/state_space.hpp"

using namespace sumalign;

TEST_SUITE("state_space") {
  TEST_CASE("two-word document with phrase bound 2 has seven states") {
    const StateSpace ss(2, 2);
    CHECK(ss.size() == 7);
    CHECK(ss.phrase_count() == 3);
    CHECK(ss.state(ss.start_id()).kind == StateKind::Start);
    CHECK(ss.state(ss.end_id()).kind == StateKind::End);
    CHECK(ss.phrase_id(1, 1) > 0);
    CHECK(ss.phrase_id(1, 2) > 0);
    CHECK(ss.phrase_id(2, 2) > 0);
    CHECK(ss.phrase_id(2, 1) == -1);
    CHECK(ss.state(ss.null_id(1)) == State{StateKind::Null, 1, 1});
    CHECK(ss.state(ss.null_id(2)) == State{StateKind::Null, 2, 2});
  }

  TEST_CASE("three-word document with phrase bound 1 has eight states") {
    const StateSpace ss(3, 1);
    CHECK(ss.size() == 8);
    CHECK(ss.phrase_count() == 3);
  }

  TEST_CASE("empty document is rejected") {
    CHECK_THROWS_AS(StateSpace(0, 2), DataError);
    CHECK_THROWS_AS(StateSpace(2, 0), DataError);
  }

  TEST_CASE("document 'a b' topology") {
    // Start reaches every phrase and null state but not End (the summary is
    // nonempty); every other state reaches End.
    const StateSpace ss(2, 2);
    const auto from_start = ss.successors(ss.start_id());
    CHECK(from_start.size() == 5);
    CHECK(std::find(from_start.begin(), from_start.end(), ss.end_id()) == from_start.end());
    for (int x = 1; x < ss.end_id(); ++x) {
      const auto succ = ss.successors(x);
      CHECK(std::find(succ.begin(), succ.end(), ss.end_id()) != succ.end());
      CHECK(std::find(succ.begin(), succ.end(), ss.start_id()) == succ.end());
      CHECK(succ.size() == 6);
    }
    CHECK(ss.successors(ss.end_id()).empty());
    CHECK(ss.max_out_degree() == 6);
  }

  TEST_CASE("ids follow start, phrases by (i, i_end), nulls, end") {
    const StateSpace ss(3, 2);
    int prev_i = 0, prev_e = 0;
    for (int k = 1; k <= ss.phrase_count(); ++k) {
      const State& s = ss.state(k);
      CHECK(s.kind == StateKind::Phrase);
      CHECK((s.i > prev_i || (s.i == prev_i && s.i_end > prev_e)));
      prev_i = s.i;
      prev_e = s.i_end;
    }
    CHECK(ss.first_null_id() == ss.phrase_count() + 1);
    CHECK(ss.end_id() == ss.size() - 1);
  }

  TEST_CASE("anchors") {
    const StateSpace ss(4, 3);
    CHECK(ss.anchor(ss.start_id()) == 0);
    CHECK(ss.anchor(ss.phrase_id(2, 4)) == 4);
    CHECK(ss.anchor(ss.null_id(3)) == 3);
    CHECK(ss.anchor(ss.end_id()) == 5);
  }

  TEST_CASE("phrase count matches the bound for every small case") {
    for (int n = 1; n <= 7; ++n) {
      for (int L = 1; L <= 4; ++L) {
        int expected = 0;
        for (int i = 1; i <= n; ++i)
          for (int e = i; e <= n && e - i + 1 <= L; ++e) ++expected;
        const StateSpace ss(n, L);
        CHECK(ss.phrase_count() == expected);
        CHECK(ss.size() == expected + n + 2);
        for (int x = 0; x < ss.end_id(); ++x) CHECK(ss.is_legal(x, ss.end_id()) == (x != ss.start_id()));
      }
    }
  }
}
