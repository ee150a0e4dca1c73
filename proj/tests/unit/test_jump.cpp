#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fig5.hpp"
#include "sumalign/error.hpp"
#include "sumalign/jump.hpp"
#include "sumalign/synthetic.hpp"
#include "sumalign/trainer.hpp"

using namespace sumalign;

namespace {

TokenizedPair plain_doc(int n) {
  std::vector<std::string> words;
  for (int i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return make_pair("d", {words}, {{"w0"}});
}

TokenizedPair parsed_doc(int n, std::mt19937_64& rng) {
  auto pair = plain_doc(n);
  return attach_parses(pair, {random_tree(pair.doc.surfaces(), rng)});
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> v(k);
  double z = 0.0;
  for (auto& x : v) z += (x = u(rng));
  for (auto& x : v) x /= z;
  return v;
}

// One model of each kind with non-uniform parameters over a parsed document.
std::vector<JumpModel> models_for(const TokenizedPair& pair, std::mt19937_64& rng) {
  const std::vector<TokenizedPair> one{pair};
  JumpModel rel = JumpModel::relative(static_cast<int>(pair.doc.size()) + 1, 0.15);
  rel.set_rel_table(random_simplex(rng, rel.rel_table().size()));
  JumpModel syn = JumpModel::syntax(JumpModel::tag_inventory(one), 0.3);
  syn.set_tag_probs(random_simplex(rng, syn.tags().size()));
  return {rel, JumpModel::gaussian(1.3, 2.5, 0.2), syn};
}

PairJumpCounts random_counts(const JumpGeometry& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PairJumpCounts c;
  c.geometry = &g;
  const auto cells = static_cast<std::size_t>(g.n + 1) * static_cast<std::size_t>(g.n + 2);
  c.to_phrase.assign(cells, 0.0);
  c.to_null.assign(cells, 0.0);
  for (int p = 0; p <= g.n; ++p) {
    for (int j = 1; j <= g.n + 1; ++j) {
      if (g.multiplicity(p, j) == 0) continue;
      c.to_phrase[g.cell(p, j)] = 2.0 * u(rng);
      if (j <= g.n) c.to_null[g.cell(p, j)] = 0.5 * u(rng);
    }
  }
  return c;
}

}  // namespace

TEST_SUITE("jump") {
  TEST_CASE("phrase to phrase uses the distance from the end of the source") {
    std::mt19937_64 rng(1);
    JumpModel m = JumpModel::relative(6, 0.1);
    m.set_rel_table(random_simplex(rng, m.rel_table().size()));
    const StateSpace ss(5, 3);
    const auto g = m.geometry(plain_doc(5), 3);
    CHECK(table_factor(m, ss, ss.phrase_id(1, 3), ss.phrase_id(4, 5), g) == doctest::Approx(m.rel(1)));
    CHECK(table_factor(m, ss, ss.phrase_id(1, 3), ss.end_id(), g) == doctest::Approx(m.rel(3)));
  }

  TEST_CASE("start to a null anchored at 3") {
    std::mt19937_64 rng(2);
    JumpModel m = JumpModel::relative(6, 0.25);
    m.set_rel_table(random_simplex(rng, m.rel_table().size()));
    const StateSpace ss(5, 2);
    const auto g = m.geometry(plain_doc(5), 2);
    CHECK(table_factor(m, ss, ss.start_id(), ss.null_id(3), g) == doctest::Approx(0.25 * m.rel(3)));
    // Out of a null, jumps are measured from the remembered anchor.
    CHECK(table_factor(m, ss, ss.null_id(3), ss.phrase_id(2, 2), g) == doctest::Approx(m.rel(-1)));
    CHECK(table_factor(m, ss, ss.null_id(3), ss.null_id(5), g) == doctest::Approx(0.25 * m.rel(2)));
  }

  TEST_CASE("gaussian weights") {
    const JumpModel m = JumpModel::gaussian(1.0, 1.0, 0.1);
    const auto g = m.geometry(plain_doc(5), 1);
    CHECK(m.log_weight(g, 2, 3) == 0.0);
    CHECK(m.log_weight(g, 2, 5) == doctest::Approx(-4.0));
    CHECK(m.log_weight(g, 2, 1) == doctest::Approx(-4.0));
    CHECK_THROWS_AS(JumpModel::gaussian(1.0, 0.0, 0.1), DataError);
  }

  TEST_CASE("syntax tags over the example sentence") {
    const auto pair = attach_parses(make_pair("f", {tokenize(fig5::kTokens)}, {{"x"}}), {parse_bracketed(fig5::kParse)});
    const auto& forest = *pair.doc_parses;
    CHECK(syntax_jump_tags(forest, pair.doc, 7, 12) == std::vector<std::string>{"PP-f"});
    CHECK(syntax_jump_tags(forest, pair.doc, 3, 8) == std::vector<std::string>{"VBD-f", "PRP-f", "POS-f", "NNS-f"});
    CHECK(syntax_jump_tags(forest, pair.doc, 3, 4).empty());
    CHECK(syntax_jump_tags(forest, pair.doc, 0, 4) == std::vector<std::string>{"NP-f"});
    // Backward jumps cover the target through the source.
    CHECK(syntax_jump_tags(forest, pair.doc, 11, 8) == std::vector<std::string>{"PP-b"});
    CHECK_THROWS_AS(syntax_jump_tags(forest, pair.doc, 16, 3), DataError);
    CHECK_THROWS_AS(syntax_jump_tags(forest, pair.doc, 2, 17), DataError);
  }

  TEST_CASE("relative frequency estimates") {
    const JumpModel r = relative_from_counts({{1, 3.0}, {-1, 1.0}}, 0.0, 2, 0.0);
    CHECK(r.rel(1) == doctest::Approx(0.75));
    CHECK(r.rel(-1) == doctest::Approx(0.25));
    CHECK(r.rel(2) == 0.0);
    CHECK(r.null_prob() == 0.0);

    const JumpModel g = gaussian_from_counts({{2, 5.0}}, 0.0, 0.25);
    CHECK(g.mu() == doctest::Approx(2.0));
    CHECK(g.sigma2() == 0.25);

    const JumpModel s = syntax_from_counts({{"PP-f", 2.0}, {"NN-b", 2.0}}, 0.0, {"NN-b", "PP-f"}, 0.0);
    CHECK(s.tag_prob("PP-f") == doctest::Approx(0.5));
    CHECK(s.tag_prob("NN-b") == doctest::Approx(0.5));

    const JumpModel withnull = relative_from_counts({{1, 3.0}}, 1.0, 2, 0.0);
    CHECK(withnull.null_prob() == doctest::Approx(0.25));
    CHECK(withnull.rel(1) == doctest::Approx(0.75));
  }

  TEST_CASE("all-zero counts are rejected") {
    CHECK_THROWS_AS(relative_from_counts({}, 0.0, 2, 0.0), NumericalError);
    CHECK_THROWS_AS(gaussian_from_counts({}, 0.0, 0.25), NumericalError);
    CHECK_THROWS_AS(syntax_from_counts({}, 0.0, {"NP-f"}, 0.0), NumericalError);
    const JumpModel m = JumpModel::relative(3, 0.1);
    const auto g = m.geometry(plain_doc(2), 1);
    PairJumpCounts c;
    c.geometry = &g;
    c.to_phrase.assign(12, 0.0);
    c.to_null.assign(12, 0.0);
    const std::vector<PairJumpCounts> cs{c};
    CHECK_THROWS_AS(reestimate(m, cs, {}), NumericalError);
  }

  TEST_CASE("illegal transitions are rejected") {
    const JumpModel m = JumpModel::relative(3, 0.1);
    const StateSpace ss(2, 1);
    const auto g = m.geometry(plain_doc(2), 1);
    CHECK_THROWS_AS(jump_logprob(m, ss, ss.start_id(), ss.end_id(), g), DataError);
    CHECK_THROWS_AS(jump_logprob(m, ss, ss.phrase_id(1, 1), ss.start_id(), g), DataError);
    CHECK_THROWS_AS(jump_logprob(m, ss, ss.end_id(), ss.phrase_id(1, 1), g), DataError);
  }

  TEST_CASE("every source distributes unit mass over its legal targets") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 6; ++n) {
      for (int L = 1; L <= 3; ++L) {
        const auto pair = parsed_doc(n, rng);
        const StateSpace ss(n, L);
        for (const auto& m : models_for(pair, rng)) {
          const auto g = m.geometry(pair, L);
          for (int x = 0; x < ss.end_id(); ++x) {
            double z = 0.0;
            for (int y : ss.successors(x)) z += std::exp(jump_logprob(m, ss, x, y, g));
            CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
          }
        }
      }
    }
  }

  TEST_CASE("relative and gaussian raw factors depend only on distance") {
    std::mt19937_64 rng(6);
    JumpModel rel = JumpModel::relative(8, 0.2);
    rel.set_rel_table(random_simplex(rng, rel.rel_table().size()));
    const JumpModel gau = JumpModel::gaussian(0.7, 3.0, 0.2);
    const int n = 6;
    const StateSpace ss(n, 2);
    for (const JumpModel* m : {static_cast<const JumpModel*>(&rel), &gau}) {
      const auto g = m->geometry(plain_doc(n), 2);
      for (int a = 0; a < ss.end_id(); ++a) {
        for (int b : ss.successors(a)) {
          if (ss.state(b).kind == StateKind::End) continue;
          const int d = ss.state(b).i - ss.anchor(a);
          // Shift both endpoints by one where the shifted states exist.
          const State& sa = ss.state(a);
          const State& sb = ss.state(b);
          if (sa.kind == StateKind::Start || sb.i_end + 1 > n || sa.i_end + 1 > n) continue;
          const int a2 = sa.kind == StateKind::Phrase ? ss.phrase_id(sa.i + 1, sa.i_end + 1) : ss.null_id(sa.i + 1);
          const int b2 = sb.kind == StateKind::Phrase ? ss.phrase_id(sb.i + 1, sb.i_end + 1) : ss.null_id(sb.i + 1);
          CHECK(table_factor(*m, ss, a2, b2, g) == doctest::Approx(table_factor(*m, ss, a, b, g)));
          CHECK(ss.state(b2).i - ss.anchor(a2) == d);
        }
      }
    }
  }

  TEST_CASE("a multi-constituent jump costs the sum of its tags") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 3 + trial % 8;
      const auto pair = parsed_doc(n, rng);
      const auto m = models_for(pair, rng)[2];
      const auto g = m.geometry(pair, 2);
      for (int p = 0; p <= n; ++p) {
        for (int j = 1; j <= n + 1; ++j) {
          if (p == 0 && j == n + 1) continue;
          double sum = 0.0;
          for (const auto& tag : syntax_jump_tags(*pair.doc_parses, pair.doc, p, j)) sum += std::log(m.tag_prob(tag));
          CHECK(m.log_weight(g, p, j) == doctest::Approx(sum));
        }
      }
    }
  }

  TEST_CASE("re-estimation never lowers the jump objective") {
    std::mt19937_64 rng(8);
    const JumpEstimateOptions opts;
    for (int trial = 0; trial < 12; ++trial) {
      const auto pair = parsed_doc(2 + trial % 5, rng);
      for (const auto& m : models_for(pair, rng)) {
        const auto g = m.geometry(pair, 2);
        const std::vector<PairJumpCounts> cs{random_counts(g, rng)};
        const JumpModel next = reestimate(m, cs, opts);
        const double before = jump_expected_loglik(m, cs) + jump_log_prior(m, opts);
        const double after = jump_expected_loglik(next, cs) + jump_log_prior(next, opts);
        CHECK(after >= before - 1e-9);
      }
    }
  }

  TEST_CASE("serialisation round-trips exactly") {
    std::mt19937_64 rng(9);
    const auto pair = parsed_doc(5, rng);
    for (const auto& m : models_for(pair, rng)) {
      std::stringstream ss;
      write_jump_model(ss, m);
      const JumpModel back = read_jump_model(ss);
      CHECK(back.kind() == m.kind());
      CHECK(back.null_prob() == m.null_prob());
      CHECK(back.rel_table() == m.rel_table());
      CHECK(back.mu() == m.mu());
      CHECK(back.sigma2() == m.sigma2());
      CHECK(back.tags() == m.tags());
      CHECK(back.tag_probs() == m.tag_probs());
    }
    std::istringstream bad("# kind relative\n# window 1\nnull\tx\n");
    CHECK_THROWS_AS(read_jump_model(bad), DataError);
  }

  TEST_CASE("training on monotone data makes +1 the most likely jump") {
    SyntheticConfig cfg = identity_heavy_config(12);
    cfg.pairs = 20;
    cfg.reorder_rate = 0.0;
    cfg.null_rate = 0.0;
    // No filler between segments: the summary is copied contiguously.
    cfg.doc_len = cfg.summary_len;
    const auto corpus = generate_corpus(cfg);
    TrainConfig tc;
    tc.iterations = 3;
    tc.max_doc_phrase_len = 2;
    tc.max_summary_phrase_len = 2;
    const auto [models, report] = em_train(corpus.pairs, tc, corpus.graph);
    const JumpModel& m = models.jump;
    for (int d = -m.window(); d <= m.window(); ++d) {
      if (d != 1) CHECK(m.rel(1) > m.rel(d));
    }
  }
}
