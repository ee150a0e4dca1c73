#include "oracle.hpp"

#include <cmath>
#include <functional>
#include <set>

#include "sumalign/synthetic.hpp"

namespace oracle {

using namespace sumalign;

PairScores Instance::scores() const { return score_pair(pair, jump, geometry, rewrite); }

std::shared_ptr<HypernymGraph> toy_graph() {
  auto g = std::make_shared<HypernymGraph>();
  g->add_edge("dog.n.01", "canine.n.01");
  g->add_edge("canine.n.01", "animal.n.01");
  g->add_edge("cat.n.01", "feline.n.01");
  g->add_edge("feline.n.01", "animal.n.01");
  g->add_sense("dog", "dog.n.01");
  g->add_sense("dogs", "dog.n.01");
  g->add_sense("cat", "cat.n.01");
  g->add_sense("canine", "canine.n.01");
  g->add_sense("animal", "animal.n.01");
  g->validate();
  return g;
}

Result enumerate(const Instance& inst) {
  const StateSpace& ss = inst.ss;
  const auto d = inst.pair.doc.surfaces();
  const auto s = inst.pair.summary.surfaces();
  const int N = static_cast<int>(s.size());
  const int l = inst.rewrite.options().max_summary_phrase_len;

  struct Step {
    int from, to, t0, t1;
  };
  std::vector<Step> path;
  std::vector<std::pair<double, std::vector<Step>>> complete;

  std::function<void(int, int, double)> rec = [&](int t, int prev, double lp) {
    if (t == N) {
      if (!ss.is_legal(prev, ss.end_id())) return;
      const double v = lp + jump_logprob(inst.jump, ss, prev, ss.end_id(), inst.geometry);
      if (v == kNegInf) return;
      path.push_back({prev, ss.end_id(), N, N + 1});
      complete.emplace_back(v, path);
      path.pop_back();
      return;
    }
    for (int x = 1; x < ss.end_id(); ++x) {
      if (!ss.is_legal(prev, x)) continue;
      const double j = jump_logprob(inst.jump, ss, prev, x, inst.geometry);
      if (j == kNegInf) continue;
      const State& st = ss.state(x);
      const int max_len = st.kind == StateKind::Null ? 1 : std::min(l, N - t);
      for (int len = 1; len <= max_len; ++len) {
        const std::vector<std::string> sw(s.begin() + t, s.begin() + t + len);
        double e;
        if (st.kind == StateKind::Null) {
          e = inst.rewrite.null_logprob(sw);
        } else {
          const std::vector<std::string> dw(d.begin() + (st.i - 1), d.begin() + st.i_end);
          e = inst.rewrite.rewrite_logprob(sw, dw);
        }
        if (e == kNegInf) continue;
        path.push_back({prev, x, t, t + len});
        rec(t + len, x, lp + j + e);
        path.pop_back();
      }
    }
  };
  rec(0, ss.start_id(), 0.0);

  Result r;
  r.paths = complete.size();
  r.boundary.assign(static_cast<std::size_t>(N + 1), 0.0);
  if (complete.empty()) return r;
  double mx = kNegInf;
  for (const auto& [v, _] : complete) mx = std::max(mx, v);
  double z = 0.0;
  for (const auto& [v, _] : complete) z += std::exp(v - mx);
  r.log_total = mx + std::log(z);
  for (const auto& [v, steps] : complete) {
    const double w = std::exp(v - r.log_total);
    if (v > r.best) {
      r.second_best = r.best;
      r.best = v;
      r.best_path.clear();
      for (const auto& st : steps) {
        if (st.to != ss.end_id()) r.best_path.push_back({st.to, st.t0, st.t1});
      }
    } else if (v > r.second_best) {
      r.second_best = v;
    }
    for (const auto& st : steps) {
      r.tau[{st.from, st.to, st.t0, st.t1}] += w;
      if (st.to != ss.end_id()) {
        r.expected_segments += w;
        r.boundary[static_cast<std::size_t>(st.t1)] += w;
      }
    }
  }
  return r;
}

namespace {

const std::vector<std::string> kWords = {"dog", "dogs", "cat", "animal", "Dog"};

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> v(k);
  double z = 0.0;
  for (auto& x : v) z += (x = u(rng));
  for (auto& x : v) x /= z;
  return v;
}

Instance build(std::vector<std::string> doc, std::vector<std::string> summary, int L, int l, JumpKind kind,
               std::mt19937_64* rng) {
  Instance inst;
  inst.graph = toy_graph();
  inst.pair = make_pair("x", {doc}, {summary});
  if (kind == JumpKind::Syntax) {
    std::mt19937_64 tree_rng(rng ? (*rng)() : 7);
    inst.pair = attach_parses(inst.pair, {random_tree(doc, tree_rng)});
  }
  RewriteOptions ro;
  ro.max_doc_phrase_len = L;
  ro.max_summary_phrase_len = l;
  const std::vector<TokenizedPair> corpus{inst.pair};
  inst.rewrite = RewriteModel::initialize(corpus, ro, inst.graph);
  const int n = static_cast<int>(doc.size());
  switch (kind) {
    case JumpKind::Relative:
      inst.jump = JumpModel::relative(n + 1, 0.2);
      break;
    case JumpKind::Gaussian:
      inst.jump = JumpModel::gaussian(1.0, 2.0, 0.2);
      break;
    case JumpKind::Syntax:
      inst.jump = JumpModel::syntax(JumpModel::tag_inventory(corpus), 0.2);
      break;
  }
  if (rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double nu = 0.05 + 0.45 * u(*rng);
    switch (kind) {
      case JumpKind::Relative:
        inst.jump = JumpModel::relative(n + 1, nu);
        inst.jump.set_rel_table(random_simplex(*rng, inst.jump.rel_table().size()));
        break;
      case JumpKind::Gaussian:
        inst.jump = JumpModel::gaussian(-1.0 + 4.0 * u(*rng), 0.5 + 3.5 * u(*rng), nu);
        break;
      case JumpKind::Syntax:
        inst.jump.set_null_prob(nu);
        inst.jump.set_tag_probs(random_simplex(*rng, inst.jump.tags().size()));
        break;
    }
    const auto lam = random_simplex(*rng, kSubmodels);
    inst.rewrite.set_lambdas({lam[0], lam[1], lam[2], lam[3]});
    inst.rewrite.set_eta(0.3 + 2.7 * u(*rng));
    std::set<std::string> rows;
    for (int i = 0; i < n; ++i)
      for (int len = 1; len <= L && i + len <= n; ++len)
        rows.insert(phrase_key(std::vector<std::string>(doc.begin() + i, doc.begin() + i + len)));
    for (const auto& key : rows) {
      const auto row = inst.rewrite.ttable_row(key);
      const auto p = random_simplex(*rng, row.size());
      for (std::size_t k = 0; k < row.size(); ++k) inst.rewrite.set_ttable_entry(key, row[k].first, p[k]);
    }
    RewriteCounts nc;
    nc.emissions = 1.0;
    for (const auto& w : inst.rewrite.summary_vocab()) nc.null_emissions[w] = 3.0 * u(*rng);
    inst.rewrite.reestimate_null(nc);
  }
  inst.geometry = inst.jump.geometry(inst.pair, L);
  inst.ss = StateSpace(n, L);
  return inst;
}

}  // namespace

Instance random_instance(std::mt19937_64& rng, JumpKind kind) {
  std::uniform_int_distribution<int> n_dist(1, 4), N_dist(1, 3), bound(1, 2);
  std::uniform_int_distribution<std::size_t> w(0, kWords.size() - 1);
  const int n = n_dist(rng), N = N_dist(rng);
  std::vector<std::string> doc, summary;
  for (int k = 0; k < n; ++k) doc.push_back(kWords[w(rng)]);
  for (int k = 0; k < N; ++k) summary.push_back(kWords[w(rng)]);
  const int L = bound(rng), l = bound(rng);
  return build(doc, summary, L, l, kind, &rng);
}

Instance make_instance(const std::vector<std::string>& doc, const std::vector<std::string>& summary,
                       int max_doc_phrase_len, int max_summary_phrase_len, JumpKind kind) {
  return build(doc, summary, max_doc_phrase_len, max_summary_phrase_len, kind, nullptr);
}

}  // namespace oracle
