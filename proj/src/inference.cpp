#include "pcfuzz/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcfuzz/error.hpp"

namespace pcfuzz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-12;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void check_token(const Circuit& c, TokenId t) {
  if (t == Vocabulary::kEndMarker || t >= c.vocab().size()) {
    throw InputError("token id " + std::to_string(t) +
                     " is not a grammar token");
  }
}

void check_span(const Circuit& c, const TokenSeq& seq, std::size_t p) {
  if (p + seq.size() > c.max_length()) {
    throw InputError("span at position " + std::to_string(p) + " of length " +
                     std::to_string(seq.size()) + " exceeds max length " +
                     std::to_string(c.max_length()));
  }
  for (TokenId t : seq) check_token(c, t);
}

template <bool kLog>
void forward(const Circuit& c, const Evidence& e, std::vector<double>& v,
             EvalStats* stats) {
  const double zero = kLog ? kNegInf : 0.0;
  const double one = kLog ? 0.0 : 1.0;
  const auto& nodes = c.nodes();
  const auto& targets = c.edge_targets();
  const auto& weights = c.edge_weights();
  const NodeId root = c.root();
  v.assign(nodes.size(), zero);
  std::size_t edges = 0;
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& node = nodes[id];
    const std::uint32_t eb = node.edge_begin;
    const std::uint32_t ee = eb + node.edge_count;
    edges += node.edge_count;
    switch (node.kind) {
      case NodeKind::kLeaf:
        v[id] = node.begin < e.max_length() && e.allows(node.begin, node.token)
                    ? one
                    : zero;
        break;
      case NodeKind::kProduct: {
        double acc = one;
        for (std::uint32_t k = eb; k < ee; ++k) {
          if constexpr (kLog) {
            acc += v[targets[k]];
          } else {
            acc *= v[targets[k]];
          }
        }
        v[id] = acc;
        break;
      }
      case NodeKind::kSum: {
        const bool is_root = id == root;
        auto active = [&](std::uint32_t k) {
          return !is_root || e.admits_length(nodes[targets[k]].end);
        };
        if constexpr (kLog) {
          double m = kNegInf;
          for (std::uint32_t k = eb; k < ee; ++k) {
            if (!active(k) || weights[k] <= 0.0) continue;
            m = std::max(m, std::log(weights[k]) + v[targets[k]]);
          }
          if (m == kNegInf) {
            v[id] = kNegInf;
            break;
          }
          double s = 0.0;
          for (std::uint32_t k = eb; k < ee; ++k) {
            if (!active(k) || weights[k] <= 0.0) continue;
            s += std::exp(std::log(weights[k]) + v[targets[k]] - m);
          }
          v[id] = m + std::log(s);
        } else {
          double s = 0.0;
          for (std::uint32_t k = eb; k < ee; ++k) {
            if (active(k)) s += weights[k] * v[targets[k]];
          }
          v[id] = s;
        }
        break;
      }
    }
  }
  if (stats) {
    stats->nodes_visited += nodes.size();
    stats->edges_visited += edges;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Evidence

Evidence::Evidence(std::size_t n) : cells_(n) {}

Evidence Evidence::full(const TokenSeq& w, std::size_t n) {
  if (w.size() > n) {
    throw InputError("sequence of length " + std::to_string(w.size()) +
                     " exceeds max length " + std::to_string(n));
  }
  Evidence e(n);
  e.observe_span(0, w);
  e.set_length(w.size());
  return e;
}

Evidence& Evidence::observe(std::size_t pos, TokenId t) {
  if (pos >= cells_.size()) {
    throw InputError("evidence position " + std::to_string(pos) +
                     " is beyond max length " + std::to_string(cells_.size()));
  }
  Cell& cell = cells_[pos];
  if (cell.observed && *cell.observed != t) {
    throw InputError("conflicting observations at position " +
                     std::to_string(pos));
  }
  if (std::binary_search(cell.excluded.begin(), cell.excluded.end(), t)) {
    throw InputError("position " + std::to_string(pos) +
                     " observes a token it also excludes");
  }
  cell.observed = t;
  return *this;
}

Evidence& Evidence::observe_span(std::size_t pos, const TokenSeq& seq) {
  for (std::size_t k = 0; k < seq.size(); ++k) observe(pos + k, seq[k]);
  return *this;
}

Evidence& Evidence::exclude(std::size_t pos, TokenId t) {
  if (pos >= cells_.size()) {
    throw InputError("evidence position " + std::to_string(pos) +
                     " is beyond max length " + std::to_string(cells_.size()));
  }
  Cell& cell = cells_[pos];
  if (cell.observed && *cell.observed == t) {
    throw InputError("position " + std::to_string(pos) +
                     " excludes a token it also observes");
  }
  auto it = std::lower_bound(cell.excluded.begin(), cell.excluded.end(), t);
  if (it == cell.excluded.end() || *it != t) cell.excluded.insert(it, t);
  return *this;
}

Evidence& Evidence::exclude_range(std::size_t begin, std::size_t end,
                                  TokenId t) {
  for (std::size_t p = begin; p < end && p < cells_.size(); ++p) exclude(p, t);
  return *this;
}

Evidence& Evidence::set_length(std::size_t length) {
  if (length_ && *length_ != length) {
    throw InputError("conflicting evidence lengths");
  }
  length_ = length;
  return *this;
}

bool Evidence::allows(std::size_t pos, TokenId t) const {
  const Cell& cell = cells_[pos];
  if (cell.observed) return *cell.observed == t;
  return !std::binary_search(cell.excluded.begin(), cell.excluded.end(), t);
}

std::size_t Evidence::observed_extent() const {
  for (std::size_t p = cells_.size(); p > 0; --p) {
    if (cells_[p - 1].observed) return p;
  }
  return 0;
}

bool Evidence::admits_length(std::size_t length) const {
  if (length_) return *length_ == length;
  return length >= observed_extent();
}

Evidence Evidence::conjoin(const Evidence& a, const Evidence& b) {
  if (a.max_length() != b.max_length()) {
    throw InputError("cannot conjoin evidence over different max lengths");
  }
  Evidence out = a;
  if (b.length_) out.set_length(*b.length_);
  for (std::size_t p = 0; p < b.cells_.size(); ++p) {
    const Cell& cell = b.cells_[p];
    if (cell.observed) out.observe(p, *cell.observed);
    for (TokenId t : cell.excluded) out.exclude(p, t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double NodeValues::root_probability(NodeId root) const {
  return log_domain ? std::exp(values[root]) : values[root];
}

bool use_log_domain(const Circuit& c, EvalDomain domain) {
  switch (domain) {
    case EvalDomain::kLinear:
      return false;
    case EvalDomain::kLog:
      return true;
    case EvalDomain::kAuto:
      return c.max_length() * c.vocab().size() > 10000;
  }
  return false;
}

void check_evidence(const Circuit& c, const Evidence& e) {
  if (!c.has_root()) throw UsageError("circuit has no root");
  if (e.max_length() != c.max_length()) {
    throw InputError("evidence covers " + std::to_string(e.max_length()) +
                     " positions but the circuit has max length " +
                     std::to_string(c.max_length()));
  }
  if (auto len = e.length()) {
    if (*len > c.max_length()) {
      throw InputError("evidence length " + std::to_string(*len) +
                       " exceeds max length " +
                       std::to_string(c.max_length()));
    }
    if (e.observed_extent() > *len) {
      throw InputError("inconsistent evidence: observation at position " +
                       std::to_string(e.observed_extent() - 1) +
                       " with fixed length " + std::to_string(*len));
    }
  }
}

NodeValues evaluate_nodes(const Circuit& c, const Evidence& e,
                          EvalDomain domain, EvalStats* stats) {
  check_evidence(c, e);
  NodeValues out;
  out.log_domain = use_log_domain(c, domain);
  if (out.log_domain) {
    forward<true>(c, e, out.values, stats);
  } else {
    forward<false>(c, e, out.values, stats);
  }
  return out;
}

double evaluate(const Circuit& c, const Evidence& e, EvalDomain domain,
                EvalStats* stats) {
  return evaluate_nodes(c, e, domain, stats).root_probability(c.root());
}

double log_evaluate(const Circuit& c, const Evidence& e) {
  return evaluate_nodes(c, e, EvalDomain::kLog).values[c.root()];
}

bool sum_edge_scores(const Circuit& c, const Evidence& e,
                     const NodeValues& values, NodeId id,
                     std::vector<double>& scores) {
  auto kids = c.children(id);
  auto w = c.weights(id);
  const bool is_root = id == c.root();
  scores.assign(kids.size(), 0.0);
  auto active = [&](std::size_t k) {
    return !is_root || e.admits_length(c.node(kids[k]).end);
  };
  bool any = false;
  if (values.log_domain) {
    double m = kNegInf;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      if (!active(k) || w[k] <= 0.0) continue;
      m = std::max(m, std::log(w[k]) + values.values[kids[k]]);
    }
    if (m == kNegInf) return false;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      if (!active(k) || w[k] <= 0.0) continue;
      scores[k] = std::exp(std::log(w[k]) + values.values[kids[k]] - m);
      any = any || scores[k] > 0.0;
    }
  } else {
    for (std::size_t k = 0; k < kids.size(); ++k) {
      if (!active(k)) continue;
      scores[k] = w[k] * values.values[kids[k]];
      any = any || scores[k] > 0.0;
    }
  }
  return any;
}

Flows compute_flows(const Circuit& c, const Evidence& e,
                    const NodeValues& values) {
  if (!(values.root_probability(c.root()) > 0.0)) {
    throw NumericError("flows requested for zero-probability evidence");
  }
  Flows f;
  f.node.assign(c.size(), 0.0);
  f.edge.assign(c.num_edges(), 0.0);
  f.node[c.root()] = 1.0;
  std::vector<double> scores;
  for (NodeId id = static_cast<NodeId>(c.size()); id-- > 0;) {
    const double flow = f.node[id];
    if (flow <= 0.0) continue;
    const Node& node = c.node(id);
    if (node.kind == NodeKind::kProduct) {
      for (NodeId k : c.children(id)) f.node[k] += flow;
    } else if (node.kind == NodeKind::kSum) {
      if (!sum_edge_scores(c, e, values, id, scores)) continue;
      double total = 0.0;
      for (double s : scores) total += s;
      auto kids = c.children(id);
      for (std::size_t k = 0; k < kids.size(); ++k) {
        const double ef = flow * scores[k] / total;
        f.edge[node.edge_begin + k] += ef;
        f.node[kids[k]] += ef;
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Queries

double evi(const Circuit& c, const TokenSeq& w, EvalDomain domain) {
  for (TokenId t : w) check_token(c, t);
  return evaluate(c, Evidence::full(w, c.max_length()), domain);
}

double log_evi(const Circuit& c, const TokenSeq& w) {
  for (TokenId t : w) check_token(c, t);
  return log_evaluate(c, Evidence::full(w, c.max_length()));
}

double mar_contains(const Circuit& c, TokenId t) {
  check_token(c, t);
  Evidence e(c.max_length());
  e.exclude_range(0, c.max_length(), t);
  return clamp01(1.0 - evaluate(c, e));
}

double mar_span(const Circuit& c, const TokenSeq& seq, std::size_t p) {
  check_span(c, seq, p);
  if (seq.empty()) return 1.0;
  Evidence e(c.max_length());
  e.observe_span(p, seq);
  return clamp01(evaluate(c, e));
}

double cond(const Circuit& c, const Evidence& target, const Evidence& given) {
  Evidence joint = Evidence::conjoin(target, given);
  const double pg = evaluate(c, given);
  if (!(pg > 0.0)) throw NumericError("conditioning event has probability 0");
  return clamp01(evaluate(c, joint) / pg);
}

double cond_contains(const Circuit& c, TokenId t2, TokenId t1) {
  check_token(c, t2);
  const double p1 = mar_contains(c, t1);
  if (!(p1 > 0.0)) {
    throw NumericError("conditioning token '" + c.vocab().name(t1) +
                       "' has probability 0");
  }
  if (t2 == t1) return 1.0;
  const std::size_t n = c.max_length();
  Evidence not_a(n), not_b(n), neither(n);
  not_a.exclude_range(0, n, t2);
  not_b.exclude_range(0, n, t1);
  neither.exclude_range(0, n, t2).exclude_range(0, n, t1);
  const double joint = 1.0 - evaluate(c, not_a) - evaluate(c, not_b) +
                       evaluate(c, neither);
  return clamp01(std::max(joint, 0.0) / p1);
}

double cond_span(const Circuit& c, const TokenSeq& seq2, std::size_t p2,
                 const TokenSeq& seq1, std::size_t p1) {
  check_span(c, seq2, p2);
  check_span(c, seq1, p1);
  Evidence target(c.max_length()), given(c.max_length());
  target.observe_span(p2, seq2);
  given.observe_span(p1, seq1);
  return cond(c, target, given);
}

double cond_after_span(const Circuit& c, TokenId t, const TokenSeq& seq,
                       std::size_t p) {
  check_token(c, t);
  check_span(c, seq, p);
  Evidence given(c.max_length());
  given.observe_span(p, seq);
  const double pg = evaluate(c, given);
  if (!(pg > 0.0)) throw NumericError("conditioning span has probability 0");
  Evidence none_after = given;
  none_after.exclude_range(p + seq.size(), c.max_length(), t);
  return clamp01(1.0 - evaluate(c, none_after) / pg);
}

namespace {

// Lowest id among scores within a relative tolerance of the maximum.
std::optional<TokenId> argmax_token(const std::vector<double>& score) {
  double best = 0.0;
  for (double s : score) best = std::max(best, s);
  if (!(best > 0.0)) return std::nullopt;
  for (TokenId t = 0; t < score.size(); ++t) {
    if (score[t] >= best * (1.0 - kTieTolerance)) return t;
  }
  return std::nullopt;
}

}  // namespace

TokenId mmap_next_at(const Circuit& c, TokenId t, std::size_t p) {
  check_token(c, t);
  const std::size_t n = c.max_length();
  if (p + 1 >= n) {
    throw InputError("no position after " + std::to_string(p) +
                     " within max length " + std::to_string(n));
  }
  if (!(mar_span(c, {t}, p) > 0.0)) {
    throw NumericError("token '" + c.vocab().name(t) + "' at position " +
                       std::to_string(p) + " has probability 0");
  }
  std::vector<double> score(c.vocab().size(), 0.0);
  for (TokenId v : c.vocab().real_tokens()) {
    Evidence e(n);
    e.observe(p, t).observe(p + 1, v);
    score[v] = evaluate(c, e);
  }
  auto best = argmax_token(score);
  if (!best) {
    throw NumericError("no token follows '" + c.vocab().name(t) +
                       "' at position " + std::to_string(p));
  }
  return *best;
}

Evidence first_occurrence_evidence(std::size_t n, TokenId t, std::size_t p) {
  Evidence e(n);
  e.exclude_range(0, p, t);
  e.observe(p, t);
  return e;
}

std::vector<double> first_occurrence_masses(const Circuit& c, TokenId t) {
  check_token(c, t);
  std::vector<double> out(c.max_length(), 0.0);
  for (std::size_t p = 0; p < c.max_length(); ++p) {
    out[p] = evaluate(c, first_occurrence_evidence(c.max_length(), t, p));
  }
  return out;
}

TokenId mmap_after(const Circuit& c, TokenId t) {
  const std::size_t n = c.max_length();
  const auto first = first_occurrence_masses(c, t);
  double total = 0.0;
  for (double f : first) total += f;
  if (!(total > 0.0)) {
    throw NumericError("token '" + c.vocab().name(t) + "' has probability 0");
  }
  std::vector<double> score(c.vocab().size(), 0.0);
  for (TokenId v : c.vocab().real_tokens()) {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      if (!(first[p] > 0.0)) continue;
      Evidence e = first_occurrence_evidence(n, t, p);
      e.exclude_range(p + 1, n, v);
      s += std::max(0.0, first[p] - evaluate(c, e));
    }
    score[v] = s;
  }
  auto best = argmax_token(score);
  if (!best) {
    throw NumericError("no position after '" + c.vocab().name(t) + "'");
  }
  return *best;
}

std::vector<Contribution> explain_evi(const Circuit& c, const TokenSeq& w,
                                      std::size_t limit) {
  for (TokenId t : w) check_token(c, t);
  Evidence e = Evidence::full(w, c.max_length());
  NodeValues values = evaluate_nodes(c, e);
  if (!(values.root_probability(c.root()) > 0.0)) return {};
  Flows flows = compute_flows(c, e, values);
  std::vector<Contribution> out;
  for (const auto& l : c.sum_labels()) {
    const double f = flows.node[l.node];
    if (f <= 0.0) continue;
    const std::string sym = l.symbol < c.symbols().size()
                                ? c.symbols()[l.symbol]
                                : "#" + std::to_string(l.symbol);
    out.push_back({sym + "[" + std::to_string(l.begin) + "," +
                       std::to_string(l.end) + ")",
                   f});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.flow > b.flow; });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace pcfuzz
