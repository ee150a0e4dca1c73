#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracle.hpp"
#include "sumalign/error.hpp"
#include "sumalign/rewrite.hpp"

using namespace sumalign;

namespace {

using Words = std::vector<std::string>;

RewriteModel model_of(const std::vector<TokenizedPair>& corpus, int L, int l,
                      std::shared_ptr<const HypernymGraph> graph = nullptr, PriorSpec prior = {}) {
  RewriteOptions o;
  o.max_doc_phrase_len = L;
  o.max_summary_phrase_len = l;
  o.prior = prior;
  return RewriteModel::initialize(corpus, o, std::move(graph));
}

RewriteCounts some_emissions() {
  RewriteCounts c;
  c.emissions = 1.0;
  return c;
}

// All sequences over `vocab` with lengths 1..l.
std::vector<Words> all_phrases(const Words& vocab, int l) {
  std::vector<Words> out;
  std::vector<Words> frontier{{}};
  for (int len = 1; len <= l; ++len) {
    std::vector<Words> next;
    for (const auto& p : frontier) {
      for (const auto& w : vocab) {
        auto q = p;
        q.push_back(w);
        next.push_back(q);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// Objective of the hypernym decay for one document phrase whose support has
// the given distance histogram.
double eta_oracle(const std::vector<std::pair<int, double>>& support, const std::vector<std::pair<int, double>>& mass,
                  double eta) {
  double z = 0.0;
  for (const auto& [d, c] : support) z += c * std::exp(-eta * d);
  double obj = 0.0;
  for (const auto& [d, m] : mass) obj += m * (-eta * d - std::log(z));
  return obj;
}

}  // namespace

TEST_SUITE("rewrite") {
  TEST_CASE("identity submodel") {
    const auto m = model_of({make_pair("x", {{"a", "b"}}, {{"a"}})}, 2, 2);
    CHECK(m.id_prob({"a", "b"}, {"a", "b"}) == 1.0);
    CHECK(m.id_prob({"a"}, {"a", "b"}) == 0.0);
    CHECK(m.id_prob({"The"}, {"the"}) == 0.0);
  }

  TEST_CASE("identity-only mixture") {
    auto m = model_of({make_pair("x", {{"the", "man", "left"}}, {{"the", "man"}})}, 2, 2);
    m.set_lambdas({1.0, 0.0, 0.0, 0.0});
    CHECK(m.rewrite_logprob({"the", "man"}, {"the", "man"}) == 0.0);
    CHECK(m.rewrite_logprob({"the", "man"}, {"man", "left"}) == kNegInf);
    CHECK(m.rewrite_logprob({"man"}, {"left"}) == kNegInf);
  }

  TEST_CASE("uniform mixture on a ten-word vocabulary") {
    // Vocabulary: walk the dog in a park | walked walking dogs today.
    // Words sharing the stem of "walk": walk, walked, walking, so Z = 3.
    // The t-table row for "walk" holds the five summary words; its initial
    // weights are 1 + fake: walked 1+5, walking 1+5, dogs/park/today 1+2.
    const auto pair = make_pair("x", {{"walk", "the", "dog", "in", "a", "park"}},
                                {{"walked", "walking", "dogs", "park", "today"}});
    const auto m = model_of({pair}, 1, 1);
    const double p_stem = 1.0 / 3.0;
    const double p_rw = 6.0 / 21.0;
    const double expected = 0.25 * 0.0 + 0.25 * p_stem + 0.25 * 0.0 + 0.25 * p_rw;
    CHECK(std::exp(m.rewrite_logprob({"walked"}, {"walk"})) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(m.stem_norm({"walk"}) == 3.0);
    CHECK(m.lexical_prob({"walked"}, {"walk"}) == doctest::Approx(p_rw));
  }

  TEST_CASE("stem submodel") {
    const auto m = model_of({make_pair("x", {{"walk", "walked", "xyzzy"}}, {{"walking"}})}, 2, 2);
    CHECK(m.stem_norm({"walked"}) == 3.0);
    CHECK(m.stem_prob({"walk"}, {"walked"}) == doctest::Approx(1.0 / 3.0));
    CHECK(m.stem_prob({"walk", "walk"}, {"walked"}) == 0.0);
    CHECK(m.stem_prob({"xyzzy"}, {"xyzzy"}) == 1.0);
    CHECK(m.stem_prob({"walk", "xyzzy"}, {"walked", "xyzzy"}) == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("hypernym distances") {
    const auto g = oracle::toy_graph();
    const auto m = model_of({make_pair("x", {{"dog", "cat"}}, {{"dog", "cat", "animal"}})}, 1, 1, g);
    CHECK(m.wn_distance({"dog"}, {"dog"}) == std::optional<int>(0));
    CHECK(m.wn_distance({"dog"}, {"cat"}) == std::optional<int>(4));
    CHECK_FALSE(m.wn_distance({"unicorn"}, {"dog"}).has_value());
    CHECK(m.wn_prob({"unicorn"}, {"dog"}) == 0.0);
    const Words words{"dog", "dogs", "cat", "canine", "animal", "unicorn"};
    for (const auto& a : words)
      for (const auto& b : words) CHECK(m.wn_distance({a}, {b}) == m.wn_distance({b}, {a}));
  }

  TEST_CASE("hypernym probabilities") {
    const auto g = oracle::toy_graph();
    auto m = model_of({make_pair("x", {{"dog"}}, {{"dog", "cat", "animal"}})}, 1, 1, g);
    m.set_eta(1.0);
    CHECK(m.wn_prob({"dog"}, {"dog"}) / m.wn_prob({"animal"}, {"dog"}) == doctest::Approx(std::exp(2.0)));
    // Three summary phrases: dog (0), cat (4), animal (2).
    CHECK(m.wn_norm({"dog"}) == doctest::Approx(1.0 + std::exp(-4.0) + std::exp(-2.0)));
    CHECK(m.wn_prob({"dog"}, {"dog"}) == doctest::Approx(1.0 / (1.0 + std::exp(-4.0) + std::exp(-2.0))));
    CHECK_THROWS_AS(m.set_eta(0.0), DataError);
    CHECK_THROWS_AS(m.set_eta(-1.0), DataError);
  }

  TEST_CASE("lexical submodel") {
    auto m = model_of({make_pair("x", {{"a"}}, {{"b"}})}, 1, 1, nullptr, PriorSpec::none());
    RewriteCounts c = some_emissions();
    c.lexical[entry_key(m.phrase_id("a"), m.phrase_id("b"))] = 1.0;
    m.reestimate_ttable(c);
    CHECK(m.lexical_prob({"b"}, {"a"}) == 1.0);
    CHECK(m.lexical_prob({"zz"}, {"a"}) == 1e-12);
    CHECK(m.lexical_prob({"b"}, {"zz"}) == 1e-12);
  }

  TEST_CASE("fake counts") {
    const PriorSpec p;
    CHECK(fake_count(p, {"dog"}, {"dog"}) == 9.0);
    CHECK(fake_count(p, {"cat"}, {"dog"}) == 2.0);
    CHECK(fake_count(p, {"big", "dog"}, {"big", "dog"}) == 7.0);
    CHECK(fake_count(p, {"walked"}, {"walk"}) == 5.0);
    CHECK(fake_count(PriorSpec::none(), {"dog"}, {"dog"}) == 0.0);
  }

  TEST_CASE("fake counts enter the re-estimated numerators and denominators") {
    auto m = model_of({make_pair("x", {{"walk"}}, {{"walk", "walked", "cat"}})}, 1, 1);
    CHECK(m.entry_fake("walk", "walk") == std::optional<double>(9.0));
    CHECK(m.entry_fake("walk", "walked") == std::optional<double>(5.0));
    CHECK(m.entry_fake("walk", "cat") == std::optional<double>(2.0));
    m.reestimate_ttable(some_emissions());
    CHECK(*m.ttable_entry("walk", "walk") == doctest::Approx(9.0 / 16.0));
    CHECK(*m.ttable_entry("walk", "walked") == doctest::Approx(5.0 / 16.0));
    CHECK(*m.ttable_entry("walk", "cat") == doctest::Approx(2.0 / 16.0));
    CHECK_THROWS_AS(m.reestimate_ttable(RewriteCounts{}), NumericalError);
  }

  TEST_CASE("t-table rows and the null table stay normalised") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const auto corpus = std::vector<TokenizedPair>{make_pair("a", {{"dog", "cat", "animal"}}, {{"dogs", "cat"}}),
                                                   make_pair("b", {{"canine", "dog"}}, {{"dog", "animal"}})};
    auto m = model_of(corpus, 2, 2, oracle::toy_graph());
    RewriteCounts c = some_emissions();
    for (int d = 0; d < static_cast<int>(m.phrase_count()); ++d)
      for (int s = 0; s < static_cast<int>(m.phrase_count()); ++s)
        if (m.ttable_entry(m.phrase(d), m.phrase(s))) c.lexical[entry_key(d, s)] = u(rng);
    for (const auto& w : m.summary_vocab()) c.null_emissions[w] = u(rng);
    m.reestimate_ttable(c);
    m.reestimate_null(c);
    for (std::size_t d = 0; d < m.phrase_count(); ++d) {
      const auto row = m.ttable_row(m.phrase(static_cast<int>(d)));
      if (row.empty()) continue;
      double z = 0.0;
      for (const auto& [_, v] : row) z += v;
      CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
    }
    double zn = 0.0;
    for (const auto& w : m.summary_vocab()) zn += m.null_prob(w);
    CHECK(zn == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("null table uses add-half smoothing") {
    auto m = model_of({make_pair("x", {{"a"}}, {{"b", "c"}})}, 1, 1);
    CHECK(m.null_prob("b") == 0.5);
    RewriteCounts c = some_emissions();
    c.null_emissions["b"] = 2.0;
    m.reestimate_null(c);
    CHECK(m.null_prob("b") == doctest::Approx(2.5 / 3.0));
    CHECK(m.null_prob("c") == doctest::Approx(0.5 / 3.0));
    CHECK(m.null_prob("zz") == 1e-12);
  }

  TEST_CASE("lambda re-estimation") {
    CHECK(RewriteModel::reestimate_lambdas({3.0, 0.0, 0.0, 0.0}) == std::array<double, kSubmodels>{1.0, 0.0, 0.0, 0.0});
    const auto eq = RewriteModel::reestimate_lambdas({2.0, 2.0, 2.0, 2.0});
    for (double v : eq) CHECK(v == 0.25);
    CHECK_THROWS_AS(RewriteModel::reestimate_lambdas({0.0, 0.0, 0.0, 0.0}), NumericalError);
  }

  TEST_CASE("memberships from two hand-scored events") {
    // Event 1 (posterior 1): weighted terms (.25, .125, 0, .125), total .5,
    // responsibilities (.5, .25, 0, .25).
    // Event 2 (posterior .5): terms (0, .1, .1, .2), total .4,
    // responsibilities (0, .25, .25, .5), scaled to (0, .125, .125, .25).
    // Sum (.5, .375, .125, .5) / 1.5 = (1/3, 1/4, 1/12, 1/3).
    const auto m = model_of({make_pair("x", {{"a"}}, {{"a", "b"}})}, 1, 1);
    PairRewriteTable t;
    t.phrases = 1;
    t.summary_len = 2;
    t.max_len = 1;
    t.terms = {{0.25, 0.125, 0.0, 0.125}, {0.0, 0.1, 0.1, 0.2}};
    t.wn_dist = {-1, -1};
    t.doc_ids = {-1};
    t.sum_ids = {-1, -1};
    t.null_prob = {0.5, 0.5};
    t.null_words = {"a", "b"};
    RewriteCounts c;
    const std::vector<double> post{1.0, 0.5}, none{0.0, 0.0};
    m.accumulate(t, post, none, c);
    const auto lam = RewriteModel::reestimate_lambdas(c.membership);
    CHECK(lam[0] == doctest::Approx(1.0 / 3.0));
    CHECK(lam[1] == doctest::Approx(1.0 / 4.0));
    CHECK(lam[2] == doctest::Approx(1.0 / 12.0));
    CHECK(lam[3] == doctest::Approx(1.0 / 3.0));
    CHECK(c.emissions == doctest::Approx(1.5));
  }

  TEST_CASE("hypernym decay estimation") {
    const auto g = oracle::toy_graph();
    auto m = model_of({make_pair("x", {{"dog"}}, {{"dog", "cat", "animal"}})}, 1, 1, g);
    const int dog = m.phrase_id("dog");
    // Support of "dog": distances 0, 4 and 2, one phrase each.
    const std::vector<std::pair<int, double>> support{{0, 1.0}, {2, 1.0}, {4, 1.0}};

    SUBCASE("all mass at distance zero runs to the upper bound") {
      const double eta = m.estimate_eta({{{dog, 0}, 3.0}});
      CHECK(eta == doctest::Approx(20.0).epsilon(1e-5));
    }
    SUBCASE("two-point expectations match a grid search") {
      const std::vector<std::pair<int, double>> mass{{0, 1.0}, {2, 1.5}};
      const double eta = m.estimate_eta({{{dog, 0}, 1.0}, {{dog, 2}, 1.5}});
      double best = 1e-3, fbest = eta_oracle(support, mass, best);
      for (double e = 1e-3; e <= 20.0; e += 1e-3) {
        const double f = eta_oracle(support, mass, e);
        if (f > fbest) {
          best = e;
          fbest = f;
        }
      }
      const double lo = std::max(1e-3, best - 2e-3);
      for (double e = lo; e <= best + 2e-3; e += 1e-6) {
        const double f = eta_oracle(support, mass, e);
        if (f > fbest) {
          best = e;
          fbest = f;
        }
      }
      CHECK(eta == doctest::Approx(best).epsilon(1e-4));
      CHECK(m.eta_objective({{{dog, 0}, 1.0}, {{dog, 2}, 1.5}}, eta) >= eta_oracle(support, mass, eta) - 1e-9);
      const std::map<std::pair<int, int>, double> counts{{{dog, 0}, 1.0}, {{dog, 2}, 1.5}};
      CHECK(m.eta_objective(counts, eta) >= m.eta_objective(counts, eta / 2.0));
      CHECK(m.eta_objective(counts, eta) >= m.eta_objective(counts, 2.0 * eta));
    }
    SUBCASE("no finite-distance mass keeps the previous value") {
      m.set_eta(1.7);
      CHECK(m.estimate_eta({}) == 1.7);
    }
  }

  TEST_CASE("the mixture sums to one over a closed vocabulary") {
    const Words vocab{"dog", "dogs", "cat", "canine", "animal"};
    for (int l = 1; l <= 2; ++l) {
      const auto pair = make_pair("x", {vocab}, {vocab});
      auto m = model_of({pair}, l, l, oracle::toy_graph());
      m.set_lambdas({0.1, 0.2, 0.3, 0.4});
      m.set_eta(0.8);
      const auto support = all_phrases(vocab, l);
      for (const auto& d : support) {
        if (static_cast<int>(d.size()) > l) continue;
        double id = 0.0, st = 0.0, wn = 0.0, rw = 0.0, mix = 0.0;
        for (const auto& s : support) {
          id += m.id_prob(s, d);
          st += m.stem_prob(s, d);
          wn += m.wn_prob(s, d);
          const auto t = m.ttable_entry(phrase_key(d), phrase_key(s));
          rw += t ? *t : 0.0;
          mix += std::exp(m.rewrite_logprob(s, d));
        }
        CHECK(id == 1.0);
        CHECK(st == doctest::Approx(1.0).epsilon(1e-12));
        // Only phrases of the document row can carry lexical mass; the
        // unseen floor adds a negligible 1e-12 per other phrase.
        const bool row = !m.ttable_row(phrase_key(d)).empty();
        if (row) CHECK(rw == doctest::Approx(1.0).epsilon(1e-9));
        if (d.size() == 1) {
          CHECK(wn == doctest::Approx(1.0).epsilon(1e-9));
          if (row) CHECK(mix == doctest::Approx(1.0).epsilon(1e-6));
        }
      }
    }
  }

  TEST_CASE("fake counts pull an identical pair above an unseen one") {
    auto m = model_of({make_pair("x", {{"dog"}}, {{"dog", "cat"}})}, 1, 1);
    m.reestimate_ttable(some_emissions());
    CHECK(m.lexical_prob({"dog"}, {"dog"}) > m.lexical_prob({"cat"}, {"dog"}));
    CHECK(m.lexical_prob({"dog"}, {"dog"}) > m.lexical_prob({"horse"}, {"dog"}));
    CHECK(*m.ttable_entry("dog", "dog") == doctest::Approx(9.0 / 11.0));
  }

  TEST_CASE("identity implies a stem match and both are parameter-free") {
    std::mt19937_64 rng(10);
    const Words words{"dog", "dogs", "cat", "walked", "walk", "Dog", "walking"};
    const auto corpus = std::vector<TokenizedPair>{make_pair("x", {words}, {words})};
    auto a = model_of(corpus, 2, 2, oracle::toy_graph());
    auto b = model_of(corpus, 2, 2, oracle::toy_graph(), PriorSpec::none());
    b.set_lambdas({0.7, 0.1, 0.1, 0.1});
    b.set_eta(3.0);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    for (int k = 0; k < 200; ++k) {
      Words s, d;
      const int len = 1 + k % 2;
      for (int i = 0; i < len; ++i) s.push_back(words[pick(rng)]);
      d = (k % 3 == 0) ? s : Words{};
      if (d.empty())
        for (int i = 0; i < len; ++i) d.push_back(words[pick(rng)]);
      if (a.id_prob(s, d) == 1.0) CHECK(a.stem_prob(s, d) > 0.0);
      CHECK(a.id_prob(s, d) == b.id_prob(s, d));
      CHECK(a.stem_prob(s, d) == b.stem_prob(s, d));
    }
  }

  TEST_CASE("the end marker and malformed null emissions are rejected") {
    const auto m = model_of({make_pair("x", {{"a"}}, {{"b"}})}, 1, 1);
    CHECK_THROWS_AS(m.rewrite_logprob({kOmega}, {"a"}), DataError);
    CHECK_THROWS_AS(m.null_logprob({kOmega}), DataError);
    CHECK_THROWS_AS(m.null_logprob({"a", "b"}), DataError);
  }

  TEST_CASE("serialisation preserves every score") {
    const auto corpus = std::vector<TokenizedPair>{make_pair("a", {{"dog", "cat", "animal"}}, {{"dogs", "cat"}}),
                                                   make_pair("b", {{"canine", "dog"}}, {{"dog", "animal"}})};
    const auto g = oracle::toy_graph();
    auto m = model_of(corpus, 2, 2, g);
    m.set_lambdas({0.4, 0.3, 0.2, 0.1});
    m.set_eta(1.25);
    RewriteCounts c = some_emissions();
    c.null_emissions["cat"] = 0.75;
    m.reestimate_null(c);
    std::stringstream ss;
    m.write(ss);
    const auto back = RewriteModel::read(ss, g);
    CHECK(back.lambdas() == m.lambdas());
    CHECK(back.eta() == m.eta());
    const Words vocab{"dog", "dogs", "cat", "canine", "animal"};
    for (const auto& s : all_phrases(vocab, 2))
      for (const auto& d : all_phrases(vocab, 2)) CHECK(back.rewrite_logprob(s, d) == m.rewrite_logprob(s, d));
    for (const auto& w : vocab) CHECK(back.null_prob(w) == m.null_prob(w));
  }
}
