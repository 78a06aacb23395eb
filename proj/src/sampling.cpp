#include "pcfuzz/sampling.hpp"

#include <algorithm>
#include <set>

#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

Constraint Constraint::contains(TokenId t) {
  Constraint q;
  q.kind = Kind::kContainsToken;
  q.token = t;
  return q;
}

Constraint Constraint::token_at(TokenId t, std::size_t p) {
  Constraint q;
  q.kind = Kind::kTokenAt;
  q.token = t;
  q.position = p;
  return q;
}

Constraint Constraint::span_at(TokenSeq seq, std::size_t p) {
  Constraint q;
  q.kind = Kind::kSpanAt;
  q.span = std::move(seq);
  q.position = p;
  return q;
}

Constraint Constraint::at_least(TokenId t, std::size_t k) {
  if (k == 0) throw UsageError("atleast count must be >= 1");
  Constraint q;
  q.kind = Kind::kContainsAtLeast;
  q.token = t;
  q.count = k;
  return q;
}

bool Constraint::satisfied_by(const TokenSeq& w) const {
  switch (kind) {
    case Kind::kContainsToken:
      return std::find(w.begin(), w.end(), token) != w.end();
    case Kind::kTokenAt:
      return position < w.size() && w[position] == token;
    case Kind::kSpanAt:
      return position + span.size() <= w.size() &&
             std::equal(span.begin(), span.end(), w.begin() + static_cast<long>(position));
    case Kind::kContainsAtLeast:
      return static_cast<std::size_t>(std::count(w.begin(), w.end(), token)) >= count;
  }
  return false;
}

std::string Constraint::to_string(const Vocabulary& vocab) const {
  switch (kind) {
    case Kind::kContainsToken:
      return "contains " + vocab.name(token);
    case Kind::kTokenAt:
      return "at " + vocab.name(token) + " " + std::to_string(position);
    case Kind::kSpanAt:
      return "span " + std::to_string(position) + " " + vocab.render(span);
    case Kind::kContainsAtLeast:
      return "atleast " + vocab.name(token) + " " + std::to_string(count);
  }
  return {};
}

Constraint parse_constraint(std::string_view text_in, const Vocabulary& vocab) {
  auto f = text::split_whitespace(text_in);
  auto usage = [&]() {
    return UsageError("bad constraint '" + std::string(text_in) +
                      "'; expected `contains T`, `at T P`, `span P T...` or "
                      "`atleast T K`");
  };
  if (f.empty()) throw usage();
  auto token = [&](const std::string& name) {
    TokenId t = vocab.id(name);
    if (t == Vocabulary::kEndMarker) throw usage();
    return t;
  };
  if (f[0] == "contains" && f.size() == 2) {
    return Constraint::contains(token(f[1]));
  }
  if (f[0] == "at" && f.size() == 3) {
    return Constraint::token_at(token(f[1]), text::parse_size(f[2]));
  }
  if (f[0] == "span" && f.size() >= 3) {
    TokenSeq seq;
    for (std::size_t i = 2; i < f.size(); ++i) seq.push_back(token(f[i]));
    return Constraint::span_at(std::move(seq), text::parse_size(f[1]));
  }
  if (f[0] == "atleast" && f.size() == 3) {
    return Constraint::at_least(token(f[1]), text::parse_size(f[2]));
  }
  throw usage();
}

TokenSeq sample(const Circuit& c, Rng& rng) {
  TokenSeq out;
  std::vector<NodeId> stack{c.root()};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const Node& node = c.node(id);
    switch (node.kind) {
      case NodeKind::kSum: {
        const NodeId child = c.children(id)[rng.categorical(c.weights(id))];
        if (id == c.root()) out.assign(c.node(child).end, 0);
        stack.push_back(child);
        break;
      }
      case NodeKind::kProduct:
        for (NodeId k : c.children(id)) stack.push_back(k);
        break;
      case NodeKind::kLeaf:
        if (node.begin >= out.size()) out.resize(node.begin + 1, 0);
        out[node.begin] = node.token;
        break;
    }
  }
  return out;
}

TokenSeq sample_with_evidence(const Circuit& c, const Evidence& e,
                              const NodeValues& values, Rng& rng) {
  TokenSeq out;
  std::vector<NodeId> stack{c.root()};
  std::vector<double> scores;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const Node& node = c.node(id);
    switch (node.kind) {
      case NodeKind::kSum: {
        if (!sum_edge_scores(c, e, values, id, scores)) {
          throw NumericError("conditioned descent reached a zero-mass node " +
                             c.describe(id));
        }
        const NodeId child = c.children(id)[rng.categorical(scores)];
        if (id == c.root()) out.assign(c.node(child).end, 0);
        stack.push_back(child);
        break;
      }
      case NodeKind::kProduct:
        for (NodeId k : c.children(id)) stack.push_back(k);
        break;
      case NodeKind::kLeaf:
        if (node.begin >= out.size()) out.resize(node.begin + 1, 0);
        out[node.begin] = node.token;
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditioned sampler

ConditionedSampler::ConditionedSampler(const Circuit& c, const Constraint& q,
                                       const SamplerOptions& options)
    : c_(c), q_(q), options_(options) {
  const std::size_t n = c.max_length();
  auto check_token = [&](TokenId t) {
    if (t == Vocabulary::kEndMarker || t >= c.vocab().size()) {
      throw InputError("constraint token id " + std::to_string(t) +
                       " is not a grammar token");
    }
  };
  switch (q.kind) {
    case Constraint::Kind::kTokenAt:
    case Constraint::Kind::kSpanAt: {
      TokenSeq seq = q.kind == Constraint::Kind::kTokenAt ? TokenSeq{q.token} : q.span;
      if (seq.empty()) throw InputError("span constraint needs at least one token");
      for (TokenId t : seq) check_token(t);
      if (q.position + seq.size() > n) {
        throw InputError("constraint span at position " +
                         std::to_string(q.position) + " exceeds max length " +
                         std::to_string(n));
      }
      evidence_.emplace(n);
      evidence_->observe_span(q.position, seq);
      values_ = evaluate_nodes(c, *evidence_);
      probability_ = values_->root_probability(c.root());
      break;
    }
    case Constraint::Kind::kContainsToken:
    case Constraint::Kind::kContainsAtLeast: {
      check_token(q.token);
      if (q.count == 0) throw UsageError("atleast count must be >= 1");
      const bool cache = c.size() * n <= options.cache_limit;
      first_.assign(n, 0.0);
      for (std::size_t p = 0; p < n; ++p) {
        NodeValues v =
            evaluate_nodes(c, first_occurrence_evidence(n, q.token, p));
        first_[p] = v.root_probability(c.root());
        if (cache) first_values_.push_back(std::move(v));
      }
      for (double f : first_) probability_ += f;
      break;
    }
  }
  if (!(probability_ > 0.0)) {
    throw NumericError("constraint '" + q.to_string(c.vocab()) +
                       "' has probability 0 under the model");
  }
}

TokenSeq ConditionedSampler::draw_exact(Rng& rng) {
  if (evidence_) return sample_with_evidence(c_, *evidence_, *values_, rng);
  const std::size_t p = rng.categorical(first_);
  Evidence e = first_occurrence_evidence(c_.max_length(), q_.token, p);
  if (!first_values_.empty()) {
    return sample_with_evidence(c_, e, first_values_[p], rng);
  }
  NodeValues v = evaluate_nodes(c_, e);
  return sample_with_evidence(c_, e, v, rng);
}

std::optional<TokenSeq> ConditionedSampler::try_draw(Rng& rng) {
  if (q_.kind != Constraint::Kind::kContainsAtLeast || q_.count <= 1) {
    return draw_exact(rng);
  }
  for (std::size_t a = 0; a < options_.max_attempts; ++a) {
    TokenSeq w = draw_exact(rng);
    ++attempts_;
    if (q_.satisfied_by(w)) {
      ++accepted_;
      return w;
    }
  }
  return std::nullopt;
}

TokenSeq ConditionedSampler::draw(Rng& rng) {
  if (auto w = try_draw(rng)) return *w;
  throw NumericError(
      "rejection budget of " + std::to_string(options_.max_attempts) +
      " attempts exhausted for '" + q_.to_string(c_.vocab()) +
      "'; acceptance estimate " + std::to_string(accepted_) + "/" +
      std::to_string(attempts_));
}

TokenSeq sample_conditioned(const Circuit& c, const Constraint& q, Rng& rng) {
  ConditionedSampler sampler(c, q);
  return sampler.draw(rng);
}

// ---------------------------------------------------------------------------
// Batches

double BatchStats::satisfaction_rate() const {
  return produced ? static_cast<double>(satisfied) / static_cast<double>(produced)
                  : 0.0;
}

double BatchStats::acceptance_rate() const {
  return attempts ? static_cast<double>(accepted) / static_cast<double>(attempts)
                  : 1.0;
}

std::string BatchStats::to_tsv() const {
  std::string out;
  out += "constraint\t" + (constraint.empty() ? std::string("none") : constraint) + "\n";
  out += "requested\t" + std::to_string(requested) + "\n";
  out += "produced\t" + std::to_string(produced) + "\n";
  out += "failures\t" + std::to_string(failures) + "\n";
  out += "distinct\t" + std::to_string(distinct) + "\n";
  out += "satisfaction_rate\t" + text::format_fixed(satisfaction_rate(), 6) + "\n";
  out += "rejection_attempts\t" + std::to_string(attempts) + "\n";
  out += "acceptance_rate\t" + text::format_fixed(acceptance_rate(), 6) + "\n";
  return out;
}

Batch sample_batch(const Circuit& c, const std::optional<Constraint>& q,
                   std::size_t count, std::uint64_t seed,
                   const SamplerOptions& options) {
  if (count == 0) throw UsageError("sample count must be >= 1");
  Batch batch;
  batch.stats.requested = count;
  std::optional<ConditionedSampler> sampler;
  if (q) {
    sampler.emplace(c, *q, options);
    batch.stats.constraint = q->to_string(c.vocab());
  }
  batch.items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(Rng::derive_seed(seed, "sample", i));
    if (!sampler) {
      batch.items.push_back(sample(c, rng));
      continue;
    }
    if (auto w = sampler->try_draw(rng)) {
      batch.items.push_back(std::move(*w));
    } else {
      ++batch.stats.failures;
    }
  }
  batch.stats.produced = batch.items.size();
  std::set<TokenSeq> distinct(batch.items.begin(), batch.items.end());
  batch.stats.distinct = distinct.size();
  for (const auto& w : batch.items) {
    if (!q || q->satisfied_by(w)) ++batch.stats.satisfied;
  }
  if (sampler) {
    batch.stats.attempts = sampler->attempts();
    batch.stats.accepted = sampler->accepted();
  }
  return batch;
}

}  // namespace pcfuzz
