#include "sumalign/semimarkov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sumalign/error.hpp"

namespace sumalign {

namespace {

std::size_t at(int row, int width, int col) {
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
}

// States grouped by anchor: Start at 0, phrases ending at p and the null
// state remembering p.
std::vector<std::vector<int>> states_by_anchor(const StateSpace& ss) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(ss.doc_len() + 1));
  for (int x = 0; x < ss.end_id(); ++x) out[static_cast<std::size_t>(ss.anchor(x))].push_back(x);
  return out;
}

// Keeps the ceil(beam * live) best live states at boundary t; ties go to the
// lower state id.
void prune(std::vector<double>& values, int t, int states, int first, int last, double beam,
           std::vector<std::uint8_t>& alive) {
  std::vector<int> live;
  for (int x = first; x <= last; ++x) {
    if (values[at(t, states, x)] != kNegInf) live.push_back(x);
  }
  const auto keep = static_cast<std::size_t>(std::ceil(beam * static_cast<double>(live.size())));
  std::stable_sort(live.begin(), live.end(), [&](int a, int b) {
    const double va = values[at(t, states, a)], vb = values[at(t, states, b)];
    if (va != vb) return va > vb;
    return a < b;
  });
  for (std::size_t r = 0; r < live.size(); ++r) {
    if (r < keep) continue;
    values[at(t, states, live[r])] = kNegInf;
    alive[at(t, states, live[r])] = 0;
  }
}

void check_beam(double beam) {
  if (!(beam > 0.0 && beam <= 1.0)) throw DataError("beam fraction must lie in (0, 1]");
}

}  // namespace

// ---------------------------------------------------------------- scoring

PairScores make_scores(const StateSpace& ss, int summary_len, int max_summary_phrase_len, PairJumpTable jump,
                       const PairRewriteTable& rewrite) {
  if (summary_len < 1) throw DataError("summary must contain at least one token");
  if (rewrite.phrases != ss.phrase_count() || rewrite.summary_len != summary_len ||
      rewrite.max_len != max_summary_phrase_len)
    throw NumericalError("rewrite table does not match the state space");
  if (jump.n != ss.doc_len()) throw NumericalError("jump table does not match the document length");
  PairScores sc;
  sc.ss = ss;
  sc.N = summary_len;
  sc.max_len = max_summary_phrase_len;
  sc.jump = std::move(jump);
  sc.emit.assign(rewrite.terms.size(), kNegInf);
  for (int k = 0; k < rewrite.phrases; ++k)
    for (int t = 0; t < summary_len; ++t)
      for (int len = 1; len <= sc.max_len && t + len <= summary_len; ++len)
        sc.emit[sc.index(k, t, len)] = safe_log(rewrite.prob(k, t, len));
  sc.null_emit.resize(static_cast<std::size_t>(summary_len));
  for (int t = 0; t < summary_len; ++t) sc.null_emit[static_cast<std::size_t>(t)] = safe_log(rewrite.null_prob[static_cast<std::size_t>(t)]);
  return sc;
}

PairScores score_pair(const TokenizedPair& pair, const JumpModel& jump, const JumpGeometry& geometry,
                      const RewriteModel& rewrite, PairRewriteTable* table_out) {
  const StateSpace ss(static_cast<int>(pair.doc.size()), rewrite.options().max_doc_phrase_len);
  if (geometry.n != ss.doc_len() || geometry.max_doc_phrase_len != ss.max_doc_phrase_len())
    throw NumericalError("jump geometry does not match pair '" + pair.id + "'");
  PairRewriteTable table = rewrite.score_pair(pair, ss);
  PairScores sc = make_scores(ss, static_cast<int>(pair.summary.size()), rewrite.options().max_summary_phrase_len,
                              jump.table(geometry), table);
  if (table_out) *table_out = std::move(table);
  return sc;
}

// ---------------------------------------------------------------- trellis

bool Trellis::alignable() const { return total_loglik != kNegInf && !std::isnan(total_loglik); }

bool Trellis::is_alive(int t, int x) const { return alive.empty() || alive[at(t, states, x)] != 0; }

double Trellis::beta_at(const StateSpace& ss, int t, int x) const {
  if (!has_beta) throw NumericalError("backward pass has not been run");
  if (x == ss.end_id()) return t == N ? 0.0 : kNegInf;
  return beta[at(t, n + 1, ss.anchor(x))];
}

Trellis forward(const PairScores& sc, double beam) {
  check_beam(beam);
  const StateSpace& ss = sc.ss;
  const int n = ss.doc_len(), N = sc.N, S = ss.size(), l = sc.max_len;
  Trellis tr;
  tr.N = N;
  tr.states = S;
  tr.n = n;
  tr.alpha.assign(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(S), kNegInf);
  tr.anchor_mass.assign(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(n + 1), kNegInf);
  tr.into_phrase.assign(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(n + 2), kNegInf);
  tr.into_null.assign(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(n + 2), kNegInf);
  const bool pruning = beam < 1.0;
  if (pruning) tr.alive.assign(tr.alpha.size(), 1);
  const auto groups = states_by_anchor(ss);
  const int P = ss.phrase_count();

  tr.alpha[at(0, S, ss.start_id())] = 0.0;
  for (int t = 0; t <= N; ++t) {
    if (t > 0) {
      for (int k = 0; k < P; ++k) {
        const State& st = ss.state(k + 1);
        double v = kNegInf;
        // Segment covers t-len .. t-1.
        for (int len = std::min(l, t); len >= 1; --len) {
          ++tr.ops;
          v = log_add(v, tr.into_phrase[at(t - len, n + 2, st.i)] + sc.e(k, t - len, len));
        }
        tr.alpha[at(t, S, k + 1)] = v;
      }
      for (int a = 1; a <= n; ++a) {
        ++tr.ops;
        tr.alpha[at(t, S, ss.null_id(a))] = tr.into_null[at(t - 1, n + 2, a)] + sc.null_emit[static_cast<std::size_t>(t - 1)];
      }
      if (pruning) prune(tr.alpha, t, S, 1, ss.end_id() - 1, beam, tr.alive);
    }
    for (int p = 0; p <= n; ++p) {
      double m = kNegInf;
      for (int x : groups[static_cast<std::size_t>(p)]) m = log_add(m, tr.alpha[at(t, S, x)]);
      tr.anchor_mass[at(t, n + 1, p)] = m;
    }
    for (int j = 1; j <= n + 1; ++j) {
      double vp = kNegInf, vn = kNegInf;
      for (int p = 0; p <= n; ++p) {
        ++tr.ops;
        const double am = tr.anchor_mass[at(t, n + 1, p)];
        if (am == kNegInf) continue;
        vp = log_add(vp, am + sc.jump.to_phrase(p, j));
        if (j <= n) vn = log_add(vn, am + sc.jump.to_null(p, j));
      }
      tr.into_phrase[at(t, n + 2, j)] = vp;
      tr.into_null[at(t, n + 2, j)] = vn;
    }
  }
  // The end marker is emitted on the transition into End after all N tokens.
  tr.total_loglik = tr.into_phrase[at(N, n + 2, n + 1)];
  return tr;
}

void backward(const PairScores& sc, Trellis& tr) {
  const StateSpace& ss = sc.ss;
  const int n = ss.doc_len(), N = sc.N, S = ss.size(), l = sc.max_len;
  if (tr.N != N || tr.states != S || tr.n != n) throw NumericalError("trellis does not match the pair scores");
  tr.beta.assign(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(n + 1), kNegInf);
  tr.out_phrase.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(n + 2), kNegInf);
  tr.out_null.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(n + 2), kNegInf);
  for (int p = 0; p <= n; ++p) tr.beta[at(N, n + 1, p)] = sc.jump.to_phrase(p, n + 1);
  for (int t = N - 1; t >= 0; --t) {
    for (int j = 1; j <= n; ++j) {
      double v = kNegInf;
      for (int e = j; e <= std::min(n, j + ss.max_doc_phrase_len() - 1); ++e) {
        const int id = ss.phrase_id(j, e);
        for (int len = 1; len <= l && t + len <= N; ++len) {
          ++tr.ops;
          if (!tr.is_alive(t + len, id)) continue;
          v = log_add(v, sc.e(id - 1, t, len) + tr.beta[at(t + len, n + 1, e)]);
        }
      }
      tr.out_phrase[at(t, n + 2, j)] = v;
      tr.out_null[at(t, n + 2, j)] = tr.is_alive(t + 1, ss.null_id(j))
                                         ? sc.null_emit[static_cast<std::size_t>(t)] + tr.beta[at(t + 1, n + 1, j)]
                                         : kNegInf;
    }
    for (int p = 0; p <= n; ++p) {
      double v = kNegInf;
      for (int j = 1; j <= n; ++j) {
        ++tr.ops;
        v = log_add(v, sc.jump.to_phrase(p, j) + tr.out_phrase[at(t, n + 2, j)]);
        v = log_add(v, sc.jump.to_null(p, j) + tr.out_null[at(t, n + 2, j)]);
      }
      tr.beta[at(t, n + 1, p)] = v;
    }
  }
  tr.beta_total = tr.beta[at(0, n + 1, 0)];
  tr.has_beta = true;
}

// ---------------------------------------------------------------- Viterbi

ViterbiResult viterbi(const PairScores& sc, double beam) {
  check_beam(beam);
  const StateSpace& ss = sc.ss;
  const int n = ss.doc_len(), N = sc.N, S = ss.size(), l = sc.max_len;
  const int P = ss.phrase_count();
  const auto groups = states_by_anchor(ss);
  const bool pruning = beam < 1.0;

  std::vector<double> zeta(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(S), kNegInf);
  std::vector<int> back_state(zeta.size(), -1), back_t(zeta.size(), -1);
  std::vector<std::uint8_t> alive;
  if (pruning) alive.assign(zeta.size(), 1);
  // Best source per (t, target start j): value and source id.
  std::vector<double> best_phrase(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(n + 2), kNegInf);
  std::vector<double> best_null(best_phrase.size(), kNegInf);
  std::vector<int> arg_phrase(best_phrase.size(), -1), arg_null(best_phrase.size(), -1);
  ViterbiResult res;

  zeta[at(0, S, 0)] = 0.0;
  for (int t = 0; t <= N; ++t) {
    if (t > 0) {
      for (int k = 0; k < P; ++k) {
        const State& st = ss.state(k + 1);
        double v = kNegInf;
        int bs = -1, bt = -1;
        // Longest segment first so that ties keep the earlier start.
        for (int len = std::min(l, t); len >= 1; --len) {
          ++res.ops;
          const std::size_t c = at(t - len, n + 2, st.i);
          const double cand = best_phrase[c] + sc.e(k, t - len, len);
          if (cand > v) {
            v = cand;
            bs = arg_phrase[c];
            bt = t - len;
          }
        }
        zeta[at(t, S, k + 1)] = v;
        back_state[at(t, S, k + 1)] = bs;
        back_t[at(t, S, k + 1)] = bt;
      }
      for (int a = 1; a <= n; ++a) {
        ++res.ops;
        const std::size_t c = at(t - 1, n + 2, a);
        const int x = ss.null_id(a);
        zeta[at(t, S, x)] = best_null[c] + sc.null_emit[static_cast<std::size_t>(t - 1)];
        back_state[at(t, S, x)] = arg_null[c];
        back_t[at(t, S, x)] = t - 1;
      }
      if (pruning) prune(zeta, t, S, 1, ss.end_id() - 1, beam, alive);
    }
    // Best state per anchor (lowest id on ties).
    std::vector<double> am(static_cast<std::size_t>(n + 1), kNegInf);
    std::vector<int> arg(static_cast<std::size_t>(n + 1), -1);
    for (int p = 0; p <= n; ++p) {
      for (int x : groups[static_cast<std::size_t>(p)]) {
        const double v = zeta[at(t, S, x)];
        if (v > am[static_cast<std::size_t>(p)]) {
          am[static_cast<std::size_t>(p)] = v;
          arg[static_cast<std::size_t>(p)] = x;
        }
      }
    }
    for (int j = 1; j <= n + 1; ++j) {
      double vp = kNegInf, vn = kNegInf;
      int ap = -1, an = -1;
      for (int p = 0; p <= n; ++p) {
        ++res.ops;
        const double base = am[static_cast<std::size_t>(p)];
        if (base == kNegInf) continue;
        const int src = arg[static_cast<std::size_t>(p)];
        const double cp = base + sc.jump.to_phrase(p, j);
        if (cp > vp || (cp == vp && cp != kNegInf && src < ap)) {
          vp = cp;
          ap = src;
        }
        if (j <= n) {
          const double cn = base + sc.jump.to_null(p, j);
          if (cn > vn || (cn == vn && cn != kNegInf && src < an)) {
            vn = cn;
            an = src;
          }
        }
      }
      best_phrase[at(t, n + 2, j)] = vp;
      arg_phrase[at(t, n + 2, j)] = ap;
      best_null[at(t, n + 2, j)] = vn;
      arg_null[at(t, n + 2, j)] = an;
    }
  }
  const std::size_t end_cell = at(N, n + 2, n + 1);
  if (best_phrase[end_cell] == kNegInf || std::isnan(best_phrase[end_cell])) return res;
  res.alignable = true;
  res.best_loglik = best_phrase[end_cell];
  int x = arg_phrase[end_cell];
  int t = N;
  while (x != ss.start_id()) {
    const int px = back_state[at(t, S, x)];
    const int pt = back_t[at(t, S, x)];
    res.segments.push_back({x, pt, t});
    x = px;
    t = pt;
  }
  std::reverse(res.segments.begin(), res.segments.end());
  return res;
}

AlignmentSet segments_to_alignment(const std::string& pair_id, const StateSpace& ss,
                                   const std::vector<Segment>& segments) {
  AlignmentSet out;
  out.pair_id = pair_id;
  for (const auto& seg : segments) {
    const State& st = ss.state(seg.state);
    AlignmentSpan span;
    span.sum = {seg.t_begin, seg.t_end - 1};
    span.label = Label::Sure;
    if (st.kind == StateKind::Phrase) span.doc = std::make_pair(st.i - 1, st.i_end - 1);
    out.spans.push_back(span);
  }
  return out;
}

std::pair<AlignmentSet, double> viterbi_decode(const TokenizedPair& pair, const PairScores& scores, double beam) {
  const ViterbiResult r = viterbi(scores, beam);
  if (!r.alignable) throw UnalignableError(pair.id);
  return {segments_to_alignment(pair.id, scores.ss, r.segments), r.best_loglik};
}

// ---------------------------------------------------------------- posteriors

Posteriors posteriors(const PairScores& sc, const Trellis& tr) {
  const StateSpace& ss = sc.ss;
  const int n = ss.doc_len(), N = sc.N, l = sc.max_len;
  if (tr.N != N || tr.n != n || tr.states != ss.size()) throw NumericalError("trellis does not match the pair scores");
  if (!tr.has_beta) throw NumericalError("posteriors need the backward pass");
  if (!tr.alignable()) throw NumericalError("posteriors of an unalignable pair");
  const double Z = tr.total_loglik;
  Posteriors post;
  post.phrase.assign(sc.emit.size(), 0.0);
  post.null.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(n + 1), 0.0);
  post.null_by_t.assign(static_cast<std::size_t>(N), 0.0);
  post.jump_phrase.assign(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 2), 0.0);
  post.jump_null.assign(post.jump_phrase.size(), 0.0);

  for (int k = 0; k < ss.phrase_count(); ++k) {
    const State& st = ss.state(k + 1);
    for (int t = 0; t < N; ++t) {
      const double in = tr.into_phrase[at(t, n + 2, st.i)];
      if (in == kNegInf) continue;
      for (int len = 1; len <= l && t + len <= N; ++len) {
        if (!tr.is_alive(t + len, k + 1)) continue;
        const double v = std::exp(in + sc.e(k, t, len) + tr.beta[at(t + len, n + 1, st.i_end)] - Z);
        post.phrase[sc.index(k, t, len)] = v;
        post.segments += v;
      }
    }
  }
  for (int t = 0; t < N; ++t) {
    for (int a = 1; a <= n; ++a) {
      if (!tr.is_alive(t + 1, ss.null_id(a))) continue;
      const double v = std::exp(tr.into_null[at(t, n + 2, a)] + sc.null_emit[static_cast<std::size_t>(t)] +
                                tr.beta[at(t + 1, n + 1, a)] - Z);
      post.null[at(t, n + 1, a)] = v;
      post.null_by_t[static_cast<std::size_t>(t)] += v;
      post.segments += v;
    }
  }
  for (int p = 0; p <= n; ++p) {
    for (int t = 0; t <= N; ++t) {
      const double am = tr.anchor_mass[at(t, n + 1, p)];
      if (am == kNegInf) continue;
      if (t < N) {
        for (int j = 1; j <= n; ++j) {
          post.jump_phrase[at(p, n + 2, j)] +=
              std::exp(am + sc.jump.to_phrase(p, j) + tr.out_phrase[at(t, n + 2, j)] - Z);
          post.jump_null[at(p, n + 2, j)] += std::exp(am + sc.jump.to_null(p, j) + tr.out_null[at(t, n + 2, j)] - Z);
        }
      } else {
        post.jump_phrase[at(p, n + 2, n + 1)] += std::exp(am + sc.jump.to_phrase(p, n + 1) - Z);
      }
    }
  }
  return post;
}

std::vector<Transition> transition_posteriors(const PairScores& sc, const Trellis& tr) {
  const StateSpace& ss = sc.ss;
  const int n = ss.doc_len(), N = sc.N, S = ss.size(), l = sc.max_len;
  if (!tr.has_beta || !tr.alignable()) throw NumericalError("transition posteriors need a complete trellis");
  const double Z = tr.total_loglik;
  std::vector<Transition> out;
  for (int t0 = 0; t0 <= N; ++t0) {
    for (int y = 0; y < ss.end_id(); ++y) {
      const double a = tr.alpha_at(t0, y);
      if (a == kNegInf) continue;
      const int p = ss.anchor(y);
      if (t0 == N) {
        if (y != ss.start_id())
          out.push_back({y, ss.end_id(), N, N + 1, std::exp(a + sc.jump.to_phrase(p, n + 1) - Z)});
        continue;
      }
      for (int x = 1; x < ss.end_id(); ++x) {
        const State& st = ss.state(x);
        if (st.kind == StateKind::Phrase) {
          for (int len = 1; len <= l && t0 + len <= N; ++len) {
            if (!tr.is_alive(t0 + len, x)) continue;
            const double v = a + sc.jump.to_phrase(p, st.i) + sc.e(x - 1, t0, len) + tr.beta[at(t0 + len, n + 1, st.i_end)];
            out.push_back({y, x, t0, t0 + len, std::exp(v - Z)});
          }
        } else {
          if (!tr.is_alive(t0 + 1, x)) continue;
          const double v = a + sc.jump.to_null(p, st.i) + sc.null_emit[static_cast<std::size_t>(t0)] +
                           tr.beta[at(t0 + 1, n + 1, st.i)];
          out.push_back({y, x, t0, t0 + 1, std::exp(v - Z)});
        }
      }
    }
  }
  (void)S;
  return out;
}

ExpectedCounts expected_counts(const PairScores& sc, const Trellis& tr, const JumpGeometry& geometry,
                               const RewriteModel& rewrite, const PairRewriteTable& table) {
  if (geometry.n != sc.ss.doc_len()) throw NumericalError("jump geometry does not match the trellis");
  if (table.terms.size() != sc.emit.size()) throw NumericalError("rewrite table does not match the trellis");
  const Posteriors post = posteriors(sc, tr);
  ExpectedCounts ec;
  ec.loglik = tr.total_loglik;
  ec.segments = post.segments;
  ec.jump.geometry = &geometry;
  ec.jump.to_phrase = post.jump_phrase;
  ec.jump.to_null = post.jump_null;
  rewrite.accumulate(table, post.phrase, post.null_by_t, ec.rewrite);
  return ec;
}

}  // namespace sumalign
