#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/inference.hpp"
#include "pcfuzz/rng.hpp"

namespace pcfuzz {

struct Constraint {
  enum class Kind { kContainsToken, kTokenAt, kSpanAt, kContainsAtLeast };
  Kind kind = Kind::kContainsToken;
  TokenId token = 0;
  std::size_t position = 0;
  TokenSeq span;
  std::size_t count = 1;

  static Constraint contains(TokenId t);
  static Constraint token_at(TokenId t, std::size_t p);
  static Constraint span_at(TokenSeq seq, std::size_t p);
  static Constraint at_least(TokenId t, std::size_t k);

  bool satisfied_by(const TokenSeq& w) const;
  // Same syntax parse_constraint accepts.
  std::string to_string(const Vocabulary& vocab) const;
};

// `contains T`, `at T P`, `span P T1 T2 ...` or `atleast T K`.
Constraint parse_constraint(std::string_view text, const Vocabulary& vocab);

// Ancestral draw: every sum node picks a child with probability equal to its
// edge weight.
TokenSeq sample(const Circuit& c, Rng& rng);

struct SamplerOptions {
  // Rejection attempts per accepted draw for ContainsAtLeast with k >= 2.
  std::size_t max_attempts = 200;
  // Cache the per-position upward passes for ContainsToken when
  // nodes * n stays below this many values.
  std::size_t cache_limit = 50'000'000;
};

// Exact sampler for P(. | constraint). Construction runs the upward passes;
// throws InputError for constraints outside the circuit's positions and
// NumericError when the constraint has probability zero.
class ConditionedSampler {
 public:
  ConditionedSampler(const Circuit& c, const Constraint& q,
                     const SamplerOptions& options = {});

  // nullopt when the rejection budget runs out.
  std::optional<TokenSeq> try_draw(Rng& rng);
  // Throws NumericError with an acceptance estimate when the budget runs out.
  TokenSeq draw(Rng& rng);

  double constraint_probability() const { return probability_; }
  std::size_t attempts() const { return attempts_; }
  std::size_t accepted() const { return accepted_; }

 private:
  TokenSeq draw_exact(Rng& rng);

  const Circuit& c_;
  Constraint q_;
  SamplerOptions options_;
  double probability_ = 0.0;
  // Span/position constraints: a single evidence.
  std::optional<Evidence> evidence_;
  std::optional<NodeValues> values_;
  // ContainsToken: first-occurrence masses and (optionally) cached passes.
  std::vector<double> first_;
  std::vector<NodeValues> first_values_;
  std::size_t attempts_ = 0;
  std::size_t accepted_ = 0;
};

TokenSeq sample_conditioned(const Circuit& c, const Constraint& q, Rng& rng);

// Top-down descent choosing sum edges proportional to weight times the
// child's value under `values`.
TokenSeq sample_with_evidence(const Circuit& c, const Evidence& e,
                              const NodeValues& values, Rng& rng);

struct BatchStats {
  std::size_t requested = 0;
  std::size_t produced = 0;
  std::size_t failures = 0;
  std::size_t distinct = 0;
  std::size_t satisfied = 0;
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  std::string constraint;

  double satisfaction_rate() const;
  // Accepted / attempted rejection draws; 1 when no rejection was used.
  double acceptance_rate() const;
  // Tab-separated key/value lines.
  std::string to_tsv() const;
};

struct Batch {
  std::vector<TokenSeq> items;
  BatchStats stats;
};

// Draw i uses a generator derived from (seed, i), so a batch depends only on
// its seed. Draws that exhaust the rejection budget are counted as failures.
Batch sample_batch(const Circuit& c, const std::optional<Constraint>& q,
                   std::size_t count, std::uint64_t seed,
                   const SamplerOptions& options = {});

}  // namespace pcfuzz
