#include "sumalign/jump.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "sumalign/error.hpp"
#include "sumalign/logmath.hpp"

namespace sumalign {

namespace {

constexpr double kOutOfWindow = 1e-12;

// Largest constituent of `root` that starts at `local` and ends no later than
// `local_end`. Walking down the chain of nodes starting at `local`, the first
// that fits is both the largest and, on unary chains, the shallowest.
const ParseTree& largest_fitting(const ParseTree& root, std::size_t local, std::size_t local_end) {
  const ParseTree* node = &root;
  while (true) {
    if (node->first == local && node->last <= local_end) return *node;
    const ParseTree* next = nullptr;
    for (const auto& c : node->children) {
      if (c.first <= local && local <= c.last) {
        next = &c;
        break;
      }
    }
    if (!next) throw DataError("parse tree does not cover token " + std::to_string(local));
    node = next;
  }
}

void collect_labels(const ParseTree& t, std::set<std::string>& out) {
  out.insert(t.label);
  for (const auto& c : t.children) collect_labels(c, out);
}

std::vector<double> normalized(std::vector<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(s > 0.0)) throw NumericalError("cannot normalise a table with zero mass");
  for (double& x : v) x /= s;
  return v;
}

// Pooled counts by signed distance j - p.
std::map<int, double> pooled_distances(std::span<const PairJumpCounts> counts) {
  std::map<int, double> out;
  for (const auto& c : counts) {
    const JumpGeometry& g = *c.geometry;
    for (int p = 0; p <= g.n; ++p) {
      for (int j = 1; j <= g.n + 1; ++j) {
        const double v = c.to_phrase[g.cell(p, j)] + c.to_null[g.cell(p, j)];
        if (v > 0.0) out[j - p] += v;
      }
    }
  }
  return out;
}

double null_mass_of(std::span<const PairJumpCounts> counts) {
  double m = 0.0;
  for (const auto& c : counts) m += std::accumulate(c.to_null.begin(), c.to_null.end(), 0.0);
  return m;
}

// One EM step on the model in which each jump is drawn from the full distance
// table and rejected until it lands on a legal target (weighted by the number
// of phrases starting there). The rejected draws are the missing data.
std::vector<double> augmented_step(const std::vector<double>& theta, int window,
                                   std::span<const PairJumpCounts> counts, double smoothing) {
  const std::size_t width = theta.size();
  std::vector<double> observed(width, 0.0), phantom(width, 0.0);
  for (const auto& c : counts) {
    const JumpGeometry& g = *c.geometry;
    const int bound = g.max_doc_phrase_len;
    for (int p = 0; p <= g.n; ++p) {
      double c_nn = 0.0, c_null = 0.0;
      for (int j = 1; j <= g.n + 1; ++j) {
        const int d = j - p;
        if (d < -window || d > window) continue;
        const double a = c.to_phrase[g.cell(p, j)];
        const double b = c.to_null[g.cell(p, j)];
        observed[static_cast<std::size_t>(d + window)] += a + b;
        c_nn += a;
        c_null += b;
      }
      if (c_nn > 0.0) {
        double z = 0.0;
        for (int j = 1; j <= g.n + 1; ++j) {
          const int d = j - p;
          if (d < -window || d > window) continue;
          z += g.multiplicity(p, j) * theta[static_cast<std::size_t>(d + window)];
        }
        for (int d = -window; d <= window; ++d) {
          const int j = p + d;
          const int w = (j >= 1 && j <= g.n + 1) ? g.multiplicity(p, j) : 0;
          const auto k = static_cast<std::size_t>(d + window);
          phantom[k] += c_nn * theta[k] * static_cast<double>(bound - w) / z;
        }
      }
      if (c_null > 0.0) {
        double z = 0.0;
        for (int j = 1; j <= g.n; ++j) {
          const int d = j - p;
          if (d >= -window && d <= window) z += theta[static_cast<std::size_t>(d + window)];
        }
        for (int d = -window; d <= window; ++d) {
          const int j = p + d;
          if (j >= 1 && j <= g.n) continue;
          const auto k = static_cast<std::size_t>(d + window);
          phantom[k] += c_null * theta[k] / z;
        }
      }
    }
  }
  std::vector<double> next(width);
  for (std::size_t k = 0; k < width; ++k) next[k] = observed[k] + phantom[k] + smoothing;
  return normalized(std::move(next));
}

std::vector<double> syntax_tag_counts(const JumpModel& model, std::span<const PairJumpCounts> counts) {
  std::vector<double> out(model.tags().size(), 0.0);
  for (const auto& c : counts) {
    const JumpGeometry& g = *c.geometry;
    for (int p = 0; p <= g.n; ++p) {
      for (int j = 1; j <= g.n + 1; ++j) {
        const double v = c.to_phrase[g.cell(p, j)] + c.to_null[g.cell(p, j)];
        if (v <= 0.0) continue;
        for (int t : g.paths[g.cell(p, j)]) {
          if (t >= 0) out[static_cast<std::size_t>(t)] += v;
        }
      }
    }
  }
  return out;
}

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": not a number: '" + text + "'");
  }
}

}  // namespace

std::string to_string(JumpKind kind) {
  switch (kind) {
    case JumpKind::Relative:
      return "relative";
    case JumpKind::Gaussian:
      return "gaussian";
    case JumpKind::Syntax:
      return "syntax";
  }
  return "?";
}

JumpKind parse_jump_kind(const std::string& name) {
  if (name == "relative") return JumpKind::Relative;
  if (name == "gaussian") return JumpKind::Gaussian;
  if (name == "syntax") return JumpKind::Syntax;
  throw DataError("unknown jump kind '" + name + "' (expected relative, gaussian or syntax)");
}

std::vector<std::string> syntax_jump_tags(const std::vector<ParseTree>& forest, const Side& doc, int from_pos,
                                          int to_pos) {
  const int n = static_cast<int>(doc.size());
  if (forest.size() != doc.sentence_count())
    throw DataError("syntax jump: parse forest does not match the document sentences");
  if (from_pos < 0 || from_pos > n || to_pos < 1 || to_pos > n + 1)
    throw DataError("syntax jump: positions " + std::to_string(from_pos) + " -> " + std::to_string(to_pos) +
                    " lie outside the parsed document");
  int first = 0, last = -1;  // 0-based, inclusive
  std::string suffix;
  if (to_pos > from_pos) {
    first = from_pos;
    last = to_pos - 2;
    suffix = "-f";
  } else {
    first = to_pos - 1;
    last = from_pos - 1;
    suffix = "-b";
  }
  std::vector<std::string> tags;
  auto x = static_cast<std::size_t>(first);
  while (static_cast<int>(x) <= last) {
    const std::size_t k = doc.sentence_of(x);
    const std::size_t begin = doc.sentence_begin(k);
    const std::size_t end = std::min(static_cast<std::size_t>(last), doc.sentence_end(k) - 1);
    const ParseTree& node = largest_fitting(forest[k], x - begin, end - begin);
    tags.push_back(node.label + suffix);
    x = begin + node.last + 1;
  }
  return tags;
}

int JumpGeometry::multiplicity(int p, int j) const {
  if (j == n + 1) return p >= 1 ? 1 : 0;
  if (j < 1 || j > n) return 0;
  return std::min(max_doc_phrase_len, n - j + 1);
}

// ---------------------------------------------------------------- JumpModel

JumpModel JumpModel::relative(int window, double null_prob) {
  if (window < 1) throw DataError("relative jump window must be at least 1");
  JumpModel m;
  m.kind_ = JumpKind::Relative;
  m.null_ = null_prob;
  m.window_ = window;
  m.rel_.assign(static_cast<std::size_t>(2 * window + 1), 1.0 / static_cast<double>(2 * window + 1));
  return m;
}

JumpModel JumpModel::gaussian(double mu, double sigma2, double null_prob) {
  if (!(sigma2 > 0.0)) throw DataError("gaussian jump variance must be positive");
  JumpModel m;
  m.kind_ = JumpKind::Gaussian;
  m.null_ = null_prob;
  m.mu_ = mu;
  m.sigma2_ = sigma2;
  return m;
}

JumpModel JumpModel::syntax(std::vector<std::string> directed_tags, double null_prob) {
  if (directed_tags.empty()) throw DataError("syntax jump model needs a non-empty tag inventory");
  JumpModel m;
  m.kind_ = JumpKind::Syntax;
  m.null_ = null_prob;
  m.tags_ = std::move(directed_tags);
  for (std::size_t i = 0; i < m.tags_.size(); ++i) {
    if (!m.tag_index_.emplace(m.tags_[i], static_cast<int>(i)).second)
      throw DataError("duplicate tag '" + m.tags_[i] + "' in the syntax inventory");
  }
  m.tag_probs_.assign(m.tags_.size(), 1.0 / static_cast<double>(m.tags_.size()));
  return m;
}

std::vector<std::string> JumpModel::tag_inventory(std::span<const TokenizedPair> pairs) {
  std::set<std::string> labels;
  for (const auto& p : pairs) {
    if (!p.doc_parses) continue;
    for (const auto& t : *p.doc_parses) collect_labels(t, labels);
  }
  std::vector<std::string> out;
  for (const auto& l : labels) {
    out.push_back(l + "-b");
    out.push_back(l + "-f");
  }
  return out;
}

double JumpModel::rel(int d) const {
  if (d < -window_ || d > window_) return (1.0 - null_) * kOutOfWindow;
  return (1.0 - null_) * rel_[static_cast<std::size_t>(d + window_)];
}

void JumpModel::set_rel_table(std::vector<double> table) {
  if (table.size() != static_cast<std::size_t>(2 * window_ + 1)) throw DataError("relative table has the wrong width");
  rel_ = std::move(table);
}

void JumpModel::set_tag_probs(std::vector<double> probs) {
  if (probs.size() != tags_.size()) throw DataError("tag table has the wrong size");
  tag_probs_ = std::move(probs);
}

int JumpModel::tag_id(const std::string& tag) const {
  auto it = tag_index_.find(tag);
  return it == tag_index_.end() ? -1 : it->second;
}

double JumpModel::tag_prob(const std::string& tag) const {
  const int id = tag_id(tag);
  return id < 0 ? kOutOfWindow : tag_probs_[static_cast<std::size_t>(id)];
}

JumpGeometry JumpModel::geometry(const TokenizedPair& pair, int max_doc_phrase_len) const {
  JumpGeometry g;
  g.n = static_cast<int>(pair.doc.size());
  g.max_doc_phrase_len = max_doc_phrase_len;
  if (kind_ != JumpKind::Syntax) return g;
  if (!pair.doc_parses) throw DataError("syntax jump model needs parses for pair '" + pair.id + "'");
  g.paths.resize(static_cast<std::size_t>(g.n + 1) * static_cast<std::size_t>(g.n + 2));
  for (int p = 0; p <= g.n; ++p) {
    for (int j = 1; j <= g.n + 1; ++j) {
      if (p == 0 && j == g.n + 1) continue;
      auto& path = g.paths[g.cell(p, j)];
      for (const auto& tag : syntax_jump_tags(*pair.doc_parses, pair.doc, p, j)) path.push_back(tag_id(tag));
    }
  }
  return g;
}

double JumpModel::log_weight(const JumpGeometry& g, int p, int j) const {
  const int d = j - p;
  switch (kind_) {
    case JumpKind::Relative:
      if (d < -window_ || d > window_) return std::log(kOutOfWindow);
      return safe_log(rel_[static_cast<std::size_t>(d + window_)]);
    case JumpKind::Gaussian: {
      const double x = static_cast<double>(d) - mu_;
      return -(x * x) / sigma2_;
    }
    case JumpKind::Syntax: {
      double lw = 0.0;
      for (int t : g.paths[g.cell(p, j)]) lw += t < 0 ? std::log(kOutOfWindow) : safe_log(tag_probs_[static_cast<std::size_t>(t)]);
      return lw;
    }
  }
  return kNegInf;
}

PairJumpTable JumpModel::table(const JumpGeometry& g) const {
  PairJumpTable t;
  t.n = g.n;
  const auto cells = static_cast<std::size_t>(g.n + 1) * static_cast<std::size_t>(g.n + 2);
  t.log_w.assign(cells, kNegInf);
  t.log_znn.assign(static_cast<std::size_t>(g.n + 1), kNegInf);
  t.log_znull.assign(static_cast<std::size_t>(g.n + 1), kNegInf);
  for (int p = 0; p <= g.n; ++p) {
    double znn = kNegInf, znull = kNegInf;
    for (int j = 1; j <= g.n + 1; ++j) {
      const int mult = g.multiplicity(p, j);
      if (mult == 0) continue;
      const double lw = log_weight(g, p, j);
      t.log_w[g.cell(p, j)] = lw;
      znn = log_add(znn, std::log(static_cast<double>(mult)) + lw);
      if (j <= g.n) znull = log_add(znull, lw);
    }
    // With no reachable target every weight is -inf already; a zero
    // normaliser would turn them into NaN.
    t.log_znn[static_cast<std::size_t>(p)] = znn == kNegInf ? 0.0 : znn;
    t.log_znull[static_cast<std::size_t>(p)] = znull == kNegInf ? 0.0 : znull;
  }
  t.log_nu = safe_log(null_);
  t.log_one_minus_nu = safe_log(1.0 - null_);
  return t;
}

// ---------------------------------------------------------------- per-state queries

double jump_logprob(const JumpModel& model, const StateSpace& ss, int from, int to, const JumpGeometry& g) {
  if (!ss.is_legal(from, to))
    throw DataError("illegal transition " + to_string(ss.state(from)) + " -> " + to_string(ss.state(to)));
  const PairJumpTable t = model.table(g);
  const int p = ss.anchor(from);
  const State& s = ss.state(to);
  switch (s.kind) {
    case StateKind::Phrase:
      return t.to_phrase(p, s.i);
    case StateKind::Null:
      return t.to_null(p, s.i);
    case StateKind::End:
      return t.to_phrase(p, ss.doc_len() + 1);
    case StateKind::Start:
      break;
  }
  throw DataError("illegal transition into <start>");
}

double table_factor(const JumpModel& model, const StateSpace& ss, int from, int to, const JumpGeometry& g) {
  if (!ss.is_legal(from, to))
    throw DataError("illegal transition " + to_string(ss.state(from)) + " -> " + to_string(ss.state(to)));
  const int p = ss.anchor(from);
  const State& s = ss.state(to);
  const int j = s.kind == StateKind::End ? ss.doc_len() + 1 : s.i;
  double w = std::exp(model.log_weight(g, p, j));
  // The relative table stores P(d | non-null); its entries carry the
  // non-null share.
  if (model.kind() == JumpKind::Relative) w *= 1.0 - model.null_prob();
  return s.kind == StateKind::Null ? model.null_prob() * w : w;
}

// ---------------------------------------------------------------- counts

void PairJumpCounts::add(const PairJumpCounts& other) {
  if (to_phrase.size() != other.to_phrase.size()) throw NumericalError("jump count tables differ in shape");
  for (std::size_t k = 0; k < to_phrase.size(); ++k) {
    to_phrase[k] += other.to_phrase[k];
    to_null[k] += other.to_null[k];
  }
}

double PairJumpCounts::total() const {
  return std::accumulate(to_phrase.begin(), to_phrase.end(), 0.0) +
         std::accumulate(to_null.begin(), to_null.end(), 0.0);
}

double jump_expected_loglik(const JumpModel& model, std::span<const PairJumpCounts> counts) {
  double q = 0.0;
  for (const auto& c : counts) {
    const JumpGeometry& g = *c.geometry;
    const PairJumpTable t = model.table(g);
    for (int p = 0; p <= g.n; ++p) {
      for (int j = 1; j <= g.n + 1; ++j) {
        const double a = c.to_phrase[g.cell(p, j)];
        const double b = c.to_null[g.cell(p, j)];
        if (a > 0.0) q += a * t.to_phrase(p, j);
        if (b > 0.0) q += b * t.to_null(p, j);
      }
    }
  }
  return q;
}

double jump_log_prior(const JumpModel& model, const JumpEstimateOptions& opts) {
  if (opts.smoothing == 0.0) return 0.0;
  double s = 0.0;
  if (model.kind() == JumpKind::Relative) {
    for (double v : model.rel_table()) s += safe_log(v);
  } else if (model.kind() == JumpKind::Syntax) {
    for (double v : model.tag_probs()) s += safe_log(v);
  }
  return opts.smoothing * s;
}

JumpModel reestimate(const JumpModel& current, std::span<const PairJumpCounts> counts, const JumpEstimateOptions& opts) {
  double total = 0.0;
  for (const auto& c : counts) total += c.total();
  if (!(total > 0.0)) throw NumericalError("jump re-estimation: all expected counts are zero");
  const double nu = std::clamp(null_mass_of(counts) / total, opts.null_floor, 1.0 - opts.null_floor);

  // The null share separates from the shape parameters, so set it first.
  JumpModel best = current;
  best.set_null_prob(nu);
  auto objective = [&](const JumpModel& m) { return jump_expected_loglik(m, counts) + jump_log_prior(m, opts); };
  double best_val = objective(best);
  auto consider = [&](const JumpModel& m) {
    const double v = objective(m);
    if (v > best_val) {
      best = m;
      best_val = v;
    }
  };

  switch (current.kind()) {
    case JumpKind::Relative: {
      const int w = current.window();
      JumpModel naive = relative_from_counts(pooled_distances(counts), 0.0, w, opts.smoothing);
      naive.set_null_prob(nu);
      consider(naive);
      std::vector<double> theta = current.rel_table();
      for (int it = 0; it < std::max(1, opts.inner_iterations); ++it)
        theta = augmented_step(theta, w, counts, opts.smoothing);
      JumpModel aug = JumpModel::relative(w, nu);
      aug.set_rel_table(std::move(theta));
      consider(aug);
      break;
    }
    case JumpKind::Gaussian: {
      const JumpModel target = gaussian_from_counts(pooled_distances(counts), 0.0, opts.sigma2_floor);
      const JumpModel start = best;
      for (double gamma = 1.0; gamma >= 1.0 / 1024.0; gamma /= 2.0) {
        const double mu = start.mu() + gamma * (target.mu() - start.mu());
        const double s2 = start.sigma2() + gamma * (target.sigma2() - start.sigma2());
        const JumpModel cand = JumpModel::gaussian(mu, s2, nu);
        if (objective(cand) > best_val) {
          consider(cand);
          break;
        }
      }
      break;
    }
    case JumpKind::Syntax: {
      std::vector<double> target = syntax_tag_counts(current, counts);
      for (double& v : target) v += opts.smoothing;
      if (std::accumulate(target.begin(), target.end(), 0.0) <= 0.0) break;
      target = normalized(std::move(target));
      const std::vector<double> start = best.tag_probs();
      for (double gamma = 1.0; gamma >= 1.0 / 1024.0; gamma /= 2.0) {
        // Geometric interpolation keeps every entry positive.
        std::vector<double> mix(start.size());
        for (std::size_t k = 0; k < mix.size(); ++k) {
          const double a = safe_log(start[k]);
          const double b = safe_log(target[k]);
          mix[k] = (a == kNegInf || b == kNegInf) ? (gamma == 1.0 ? target[k] : start[k])
                                                 : std::exp((1.0 - gamma) * a + gamma * b);
        }
        JumpModel cand = best;
        cand.set_tag_probs(normalized(std::move(mix)));
        if (objective(cand) > best_val) {
          consider(cand);
          break;
        }
      }
      break;
    }
  }
  return best;
}

JumpModel relative_from_counts(const std::map<int, double>& distance_counts, double null_mass, int window,
                               double smoothing) {
  std::vector<double> table(static_cast<std::size_t>(2 * window + 1), smoothing);
  double seen = 0.0;
  for (const auto& [d, v] : distance_counts) {
    if (v < 0.0) throw NumericalError("negative jump count");
    seen += v;
    if (d >= -window && d <= window) table[static_cast<std::size_t>(d + window)] += v;
  }
  if (!(seen + null_mass > 0.0)) throw NumericalError("relative jump estimate: all counts are zero");
  JumpModel m = JumpModel::relative(window, null_mass / (seen + null_mass));
  m.set_rel_table(normalized(std::move(table)));
  return m;
}

JumpModel gaussian_from_counts(const std::map<int, double>& distance_counts, double null_mass, double sigma2_floor) {
  double mass = 0.0, sum = 0.0;
  for (const auto& [d, v] : distance_counts) {
    mass += v;
    sum += v * d;
  }
  if (!(mass + null_mass > 0.0)) throw NumericalError("gaussian jump estimate: all counts are zero");
  const double mu = mass > 0.0 ? sum / mass : 1.0;
  double var = 0.0;
  for (const auto& [d, v] : distance_counts) var += v * (d - mu) * (d - mu);
  var = mass > 0.0 ? var / mass : sigma2_floor;
  return JumpModel::gaussian(mu, std::max(var, sigma2_floor), null_mass / (mass + null_mass));
}

JumpModel syntax_from_counts(const std::map<std::string, double>& tag_counts, double null_mass,
                             std::vector<std::string> directed_tags, double smoothing) {
  JumpModel m = JumpModel::syntax(std::move(directed_tags), 0.0);
  std::vector<double> probs(m.tags().size(), smoothing);
  double seen = 0.0;
  for (const auto& [tag, v] : tag_counts) {
    const int id = m.tag_id(tag);
    if (id < 0) throw DataError("tag '" + tag + "' is not in the inventory");
    probs[static_cast<std::size_t>(id)] += v;
    seen += v;
  }
  if (!(seen + null_mass > 0.0)) throw NumericalError("syntax jump estimate: all counts are zero");
  m.set_tag_probs(normalized(std::move(probs)));
  m.set_null_prob(null_mass / (seen + null_mass));
  return m;
}

// ---------------------------------------------------------------- I/O

void write_jump_model(std::ostream& out, const JumpModel& m) {
  out << "# kind " << to_string(m.kind()) << '\n';
  switch (m.kind()) {
    case JumpKind::Relative:
      out << "# window " << m.window() << '\n';
      out << "# dist:<d> entries are P(d | non-null); jump_rel(d) = (1 - null) * entry\n";
      break;
    case JumpKind::Gaussian:
      out << "# weight exp(-(d - mu)^2 / sigma2), normalised per source over legal targets\n";
      break;
    case JumpKind::Syntax:
      out << "# tags " << m.tags().size() << '\n';
      break;
  }
  out << "null\t" << format_double(m.null_prob()) << '\n';
  switch (m.kind()) {
    case JumpKind::Relative:
      for (int d = -m.window(); d <= m.window(); ++d)
        out << "dist:" << d << '\t' << format_double(m.rel_table()[static_cast<std::size_t>(d + m.window())]) << '\n';
      break;
    case JumpKind::Gaussian:
      out << "mu\t" << format_double(m.mu()) << '\n';
      out << "sigma2\t" << format_double(m.sigma2()) << '\n';
      break;
    case JumpKind::Syntax:
      for (std::size_t k = 0; k < m.tags().size(); ++k)
        out << "tag:" << m.tags()[k] << '\t' << format_double(m.tag_probs()[k]) << '\n';
      break;
  }
}

JumpModel read_jump_model(std::istream& in, const std::string& source) {
  std::optional<JumpKind> kind;
  int window = 0;
  double null_prob = 0.0, mu = 1.0, sigma2 = 1.0;
  std::map<int, double> dist;
  std::vector<std::string> tags;
  std::vector<double> tag_probs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    line = trim_copy(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "kind") {
        std::string name;
        hs >> name;
        kind = parse_jump_kind(name);
      } else if (key == "window") {
        hs >> window;
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(where + ": expected feature<TAB>probability");
    const std::string feat = line.substr(0, tab);
    const double v = parse_double(trim_copy(line.substr(tab + 1)), where);
    if (feat == "null") {
      null_prob = v;
    } else if (feat == "mu") {
      mu = v;
    } else if (feat == "sigma2") {
      sigma2 = v;
    } else if (feat.rfind("dist:", 0) == 0) {
      dist[std::stoi(feat.substr(5))] = v;
    } else if (feat.rfind("tag:", 0) == 0) {
      tags.push_back(feat.substr(4));
      tag_probs.push_back(v);
    } else {
      throw DataError(where + ": unknown feature '" + feat + "'");
    }
  }
  if (!kind) throw DataError(source + ": missing '# kind' header");
  switch (*kind) {
    case JumpKind::Relative: {
      if (window < 1) throw DataError(source + ": missing or invalid '# window' header");
      JumpModel m = JumpModel::relative(window, null_prob);
      std::vector<double> table(static_cast<std::size_t>(2 * window + 1), 0.0);
      for (const auto& [d, v] : dist) {
        if (d < -window || d > window) throw DataError(source + ": distance " + std::to_string(d) + " outside window");
        table[static_cast<std::size_t>(d + window)] = v;
      }
      m.set_rel_table(std::move(table));
      return m;
    }
    case JumpKind::Gaussian:
      return JumpModel::gaussian(mu, sigma2, null_prob);
    case JumpKind::Syntax: {
      JumpModel m = JumpModel::syntax(tags, null_prob);
      m.set_tag_probs(std::move(tag_probs));
      return m;
    }
  }
  throw DataError(source + ": unreadable jump model");
}

void save_jump_model(const std::filesystem::path& path, const JumpModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_jump_model(out, model);
}

JumpModel load_jump_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open jump model '" + path.string() + "'");
  return read_jump_model(in, path.string());
}

}  // namespace sumalign
