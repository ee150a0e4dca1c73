#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "sumalign/error.hpp"
#include "sumalign/semimarkov.hpp"

using namespace sumalign;

namespace {

// Pure-identity rewrite and a one-hot relative table at distance 1 with no
// null mass: only the monotone identity path survives.
oracle::Instance forced_identity(const std::vector<std::string>& doc, const std::vector<std::string>& summary,
                                 int L) {
  auto inst = oracle::make_instance(doc, summary, L, 1);
  inst.rewrite.set_lambdas({1.0, 0.0, 0.0, 0.0});
  const int w = inst.jump.window();
  std::vector<double> table(static_cast<std::size_t>(2 * w + 1), 0.0);
  table[static_cast<std::size_t>(w + 1)] = 1.0;
  inst.jump = JumpModel::relative(w, 0.0);
  inst.jump.set_rel_table(table);
  inst.geometry = inst.jump.geometry(inst.pair, L);
  return inst;
}

std::map<oracle::TransitionKey, double> tau_map(const std::vector<Transition>& ts) {
  std::map<oracle::TransitionKey, double> m;
  for (const auto& t : ts) m[{t.from, t.to, t.t0, t.t1}] += t.tau;
  return m;
}

}  // namespace

TEST_SUITE("semimarkov") {
  TEST_CASE("single nonzero path has probability one") {
    auto inst = forced_identity({"a"}, {"a"}, 1);
    const PairScores sc = inst.scores();
    Trellis tr = forward(sc);
    CHECK(tr.total_loglik == doctest::Approx(0.0).epsilon(1e-12));
    backward(sc, tr);
    CHECK(tr.beta_total == doctest::Approx(0.0).epsilon(1e-12));
    const auto taus = transition_posteriors(sc, tr);
    for (const auto& t : taus) {
      if (t.tau > 0.0) CHECK(t.tau == doctest::Approx(1.0));
    }
    const ViterbiResult v = viterbi(sc);
    REQUIRE(v.alignable);
    CHECK(v.best_loglik == doctest::Approx(tr.total_loglik));
  }

  TEST_CASE("on-path beta equals the product of the remaining factors") {
    auto inst = forced_identity({"a", "b"}, {"a", "b"}, 1);
    const PairScores sc = inst.scores();
    Trellis tr = forward(sc);
    backward(sc, tr);
    // Path Start -> r11 -> r22 -> End with every factor 1.
    CHECK(tr.beta_at(inst.ss, 1, inst.ss.phrase_id(1, 1)) == doctest::Approx(0.0));
    CHECK(tr.beta_at(inst.ss, 2, inst.ss.phrase_id(2, 2)) == doctest::Approx(0.0));
    CHECK(tr.beta_at(inst.ss, 1, inst.ss.phrase_id(2, 2)) == kNegInf);
  }

  TEST_CASE("identity decode of 'a b' with phrase bound 1 is the diagonal") {
    auto inst = forced_identity({"a", "b"}, {"a", "b"}, 1);
    const auto [al, score] = viterbi_decode(inst.pair, inst.scores());
    REQUIRE(al.spans.size() == 2);
    CHECK(al.spans[0].doc == std::make_optional(std::make_pair(0, 0)));
    CHECK(al.spans[0].sum == std::make_pair(0, 0));
    CHECK(al.spans[1].doc == std::make_optional(std::make_pair(1, 1)));
    CHECK(al.spans[1].sum == std::make_pair(1, 1));
    CHECK(score == doctest::Approx(0.0));
  }

  TEST_CASE("'c d' generated by 'a' with 'b' unaligned is Start -> r11 -> End") {
    auto inst = oracle::make_instance({"a", "b"}, {"c", "d"}, 1, 2);
    inst.rewrite.set_lambdas({0.0, 0.0, 0.0, 1.0});
    for (const auto& [s, _] : inst.rewrite.ttable_row("a")) inst.rewrite.set_ttable_entry("a", s, s == "c d" ? 1.0 : 0.0);
    for (const auto& [s, _] : inst.rewrite.ttable_row("b")) inst.rewrite.set_ttable_entry("b", s, 0.0);
    inst.jump.set_null_prob(0.0);
    const PairScores sc = inst.scores();
    const ViterbiResult v = viterbi(sc);
    REQUIRE(v.alignable);
    REQUIRE(v.segments.size() == 1);
    CHECK(v.segments[0].state == inst.ss.phrase_id(1, 1));
    CHECK(v.segments[0].t_begin == 0);
    CHECK(v.segments[0].t_end == 2);
    Trellis tr = forward(sc);
    CHECK(v.best_loglik == doctest::Approx(tr.total_loglik));
    const auto al = segments_to_alignment("x", inst.ss, v.segments);
    CHECK(al.spans[0].doc == std::make_optional(std::make_pair(0, 0)));
    CHECK(al.spans[0].sum == std::make_pair(0, 1));
  }

  TEST_CASE("zero rewrite mass is unalignable, not a crash") {
    auto inst = oracle::make_instance({"a"}, {"b"}, 1, 1);
    inst.rewrite.set_lambdas({1.0, 0.0, 0.0, 0.0});
    inst.jump.set_null_prob(0.0);
    const PairScores sc = inst.scores();
    const Trellis tr = forward(sc);
    CHECK_FALSE(tr.alignable());
    CHECK_FALSE(viterbi(sc).alignable);
    CHECK_THROWS_AS(viterbi_decode(inst.pair, sc), UnalignableError);
  }

  TEST_CASE("exact ties go to the lower state id") {
    // Doc "a a", summary "a": r11 and r22 tie exactly under a symmetric
    // relative table.
    auto inst = oracle::make_instance({"a", "a"}, {"a"}, 1, 1);
    inst.rewrite.set_lambdas({1.0, 0.0, 0.0, 0.0});
    inst.jump.set_null_prob(0.0);
    const PairScores sc = inst.scores();
    Trellis tr = forward(sc);
    backward(sc, tr);
    const ViterbiResult v = viterbi(sc);
    REQUIRE(v.segments.size() == 1);
    CHECK(v.segments[0].state == inst.ss.phrase_id(1, 1));
    // The two paths are equally likely, so each transition carries 1/2.
    const auto taus = tau_map(transition_posteriors(sc, tr));
    CHECK(taus.at({0, inst.ss.phrase_id(1, 1), 0, 1}) == doctest::Approx(0.5));
    CHECK(taus.at({0, inst.ss.phrase_id(2, 2), 0, 1}) == doctest::Approx(0.5));
    CHECK(v.best_loglik < tr.total_loglik);
  }

  TEST_CASE("random instances agree with exhaustive enumeration") {
    std::mt19937_64 rng(20240611);
    int compared_argmax = 0;
    for (int trial = 0; trial < 90; ++trial) {
      const JumpKind kind = static_cast<JumpKind>(trial % 3);
      const auto inst = oracle::random_instance(rng, kind);
      const auto o = oracle::enumerate(inst);
      const PairScores sc = inst.scores();
      Trellis tr = forward(sc);
      const ViterbiResult v = viterbi(sc);
      if (o.paths == 0) {
        CHECK_FALSE(tr.alignable());
        CHECK_FALSE(v.alignable);
        continue;
      }
      REQUIRE(tr.alignable());
      CHECK(std::abs(tr.total_loglik - o.log_total) < 1e-8);
      backward(sc, tr);
      CHECK(std::abs(tr.beta_total - o.log_total) < 1e-8);
      REQUIRE(v.alignable);
      CHECK(std::abs(v.best_loglik - o.best) < 1e-8);
      CHECK(v.best_loglik <= tr.total_loglik + 1e-12);
      if (o.best - o.second_best > 1e-9) {
        ++compared_argmax;
        REQUIRE(v.segments.size() == o.best_path.size());
        for (std::size_t k = 0; k < v.segments.size(); ++k) {
          CHECK(v.segments[k].state == o.best_path[k].state);
          CHECK(v.segments[k].t_begin == o.best_path[k].t_begin);
          CHECK(v.segments[k].t_end == o.best_path[k].t_end);
        }
      }
      const auto taus = tau_map(transition_posteriors(sc, tr));
      for (const auto& [key, val] : o.tau) {
        const auto it = taus.find(key);
        CHECK(std::abs((it == taus.end() ? 0.0 : it->second) - val) < 1e-10);
      }
      for (const auto& [key, val] : taus) {
        if (!o.tau.count(key)) CHECK(std::abs(val) < 1e-10);
      }
      const Posteriors post = posteriors(sc, tr);
      CHECK(std::abs(post.segments - o.expected_segments) < 1e-10);
      // Flow conservation at every inner boundary.
      for (int t = 1; t < sc.N; ++t) {
        double flow = 0.0;
        for (int x = 1; x < inst.ss.end_id(); ++x) {
          const double a = tr.alpha_at(t, x);
          if (a == kNegInf) continue;
          flow += std::exp(a + tr.beta_at(inst.ss, t, x) - tr.total_loglik);
        }
        CHECK(std::abs(flow - o.boundary[static_cast<std::size_t>(t)]) < 1e-10);
      }
      // Exactly one path iff Viterbi and forward totals coincide.
      if (o.paths == 1) CHECK(std::abs(v.best_loglik - tr.total_loglik) < 1e-10);
      if (o.paths > 1) CHECK(v.best_loglik < tr.total_loglik);
    }
    CHECK(compared_argmax > 40);
  }

  TEST_CASE("beam 1.0 is bit-identical to a pruning pass that keeps everything") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto inst = oracle::random_instance(rng, JumpKind::Relative);
      const PairScores sc = inst.scores();
      const Trellis a = forward(sc, 1.0);
      // ceil(0.9999999 * live) == live for these sizes, so the prune pass runs
      // but removes nothing.
      const Trellis b = forward(sc, 0.9999999);
      CHECK(a.alpha == b.alpha);
      CHECK((a.total_loglik == b.total_loglik || (std::isinf(a.total_loglik) && std::isinf(b.total_loglik))));
      const ViterbiResult va = viterbi(sc, 1.0), vb = viterbi(sc, 0.9999999);
      CHECK(va.best_loglik == vb.best_loglik);
    }
  }

  TEST_CASE("beam pruning keeps ceil(fraction * live) states") {
    auto inst = oracle::make_instance({"dog", "cat", "animal", "dogs"}, {"dog", "cat", "animal"}, 2, 2);
    const PairScores sc = inst.scores();
    const Trellis full = forward(sc, 1.0);
    const Trellis half = forward(sc, 0.5);
    for (int t = 1; t <= sc.N; ++t) {
      int live = 0, kept = 0;
      for (int x = 1; x < inst.ss.end_id(); ++x) {
        live += full.alpha_at(t, x) != kNegInf;
        kept += half.alpha_at(t, x) != kNegInf;
      }
      // Pruning at earlier boundaries can only shrink the live set further.
      CHECK(kept <= (live + 1) / 2);
    }
    CHECK(half.total_loglik <= full.total_loglik);
  }

  TEST_CASE("operation counts grow as N * T * b * l at most") {
    std::vector<double> ratios;
    std::uint64_t prev_ops = 0;
    for (int scale : {1, 2, 4}) {
      std::vector<std::string> doc, summary;
      for (int k = 0; k < 10 * scale; ++k) doc.push_back("w" + std::to_string(k));
      for (int k = 0; k < 4 * scale; ++k) summary.push_back("w" + std::to_string(2 * k));
      auto inst = oracle::make_instance(doc, summary, 3, 3);
      const PairScores sc = inst.scores();
      Trellis tr = forward(sc);
      backward(sc, tr);
      const ViterbiResult v = viterbi(sc);
      const double bound = static_cast<double>(sc.N) * inst.ss.size() * inst.ss.max_out_degree() * sc.max_len;
      ratios.push_back(static_cast<double>(tr.ops + v.ops) / bound);
      if (prev_ops) CHECK(tr.ops > prev_ops);
      prev_ops = tr.ops;
    }
    for (double r : ratios) CHECK(r < 1.0);
    // The ratio does not grow with the input size.
    CHECK(ratios[2] <= ratios[0] * 1.01);
  }

  TEST_CASE("mismatched trellis and parameters are rejected") {
    const auto a = oracle::make_instance({"a", "b"}, {"a"}, 1, 1);
    const auto b = oracle::make_instance({"a", "b", "c"}, {"a"}, 1, 1);
    Trellis tr = forward(a.scores());
    CHECK_THROWS_AS(backward(b.scores(), tr), NumericalError);
    CHECK_THROWS_AS(posteriors(a.scores(), tr), NumericalError);
  }
}
