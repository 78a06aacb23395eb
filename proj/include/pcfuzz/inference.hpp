#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/vocabulary.hpp"

namespace pcfuzz {

// Observations over positions 0..n-1. Each cell is free, observed as one
// token, or restricted by a set of excluded tokens. The length is either
// fixed or unconstrained; unconstrained evidence only counts lengths that
// cover every observed position.
class Evidence {
 public:
  struct Cell {
    std::optional<TokenId> observed;
    std::vector<TokenId> excluded;  // sorted, unique
  };

  explicit Evidence(std::size_t n);
  // Fully observed sequence with fixed length |w|.
  static Evidence full(const TokenSeq& w, std::size_t n);

  // Throw InputError on positions >= n or conflicts with existing cells.
  Evidence& observe(std::size_t pos, TokenId t);
  Evidence& observe_span(std::size_t pos, const TokenSeq& seq);
  Evidence& exclude(std::size_t pos, TokenId t);
  Evidence& exclude_range(std::size_t begin, std::size_t end, TokenId t);
  Evidence& set_length(std::size_t length);

  std::size_t max_length() const { return cells_.size(); }
  std::optional<std::size_t> length() const { return length_; }
  const Cell& cell(std::size_t pos) const { return cells_[pos]; }
  bool allows(std::size_t pos, TokenId t) const;
  // One past the largest observed position, 0 if nothing is observed.
  std::size_t observed_extent() const;
  // Whether a root child for strings of exactly `length` tokens counts.
  bool admits_length(std::size_t length) const;

  // Cell-wise conjunction. Throws InputError when the two disagree on an
  // observed token, observe a token the other excludes, or fix different
  // lengths.
  static Evidence conjoin(const Evidence& a, const Evidence& b);

 private:
  std::vector<Cell> cells_;
  std::optional<std::size_t> length_;
};

enum class EvalDomain { kAuto, kLinear, kLog };

struct EvalStats {
  std::size_t nodes_visited = 0;
  std::size_t edges_visited = 0;
};

// Per-node results of one bottom-up pass. In the log domain `values` hold
// natural logs (-inf for zero).
struct NodeValues {
  bool log_domain = false;
  std::vector<double> values;

  // Value of the root as a probability.
  double root_probability(NodeId root) const;
};

// Resolves kAuto: log domain when n * |vocabulary| > 10^4.
bool use_log_domain(const Circuit& c, EvalDomain domain);

// Throws InputError when the evidence does not fit the circuit (different
// maximum length, fixed length beyond n, observations beyond a fixed length).
void check_evidence(const Circuit& c, const Evidence& e);

NodeValues evaluate_nodes(const Circuit& c, const Evidence& e,
                          EvalDomain domain = EvalDomain::kAuto,
                          EvalStats* stats = nullptr);
double evaluate(const Circuit& c, const Evidence& e,
                EvalDomain domain = EvalDomain::kAuto,
                EvalStats* stats = nullptr);
// Natural log of evaluate, computed in the log domain.
double log_evaluate(const Circuit& c, const Evidence& e);

// Edge scores for descending from sum node `id`: proportional to
// weight * child value under `values`. Root edges that the evidence rules
// out get 0. Returns false when every score is zero.
bool sum_edge_scores(const Circuit& c, const Evidence& e,
                     const NodeValues& values, NodeId id,
                     std::vector<double>& scores);

// Posterior probability that each node takes part in a derivation
// consistent with the evidence, plus per-edge flows. Requires a positive
// evaluation.
struct Flows {
  std::vector<double> node;
  std::vector<double> edge;
};
Flows compute_flows(const Circuit& c, const Evidence& e,
                    const NodeValues& values);

double evi(const Circuit& c, const TokenSeq& w,
           EvalDomain domain = EvalDomain::kAuto);
double log_evi(const Circuit& c, const TokenSeq& w);
double mar_contains(const Circuit& c, TokenId t);
double mar_span(const Circuit& c, const TokenSeq& seq, std::size_t p);
double cond(const Circuit& c, const Evidence& target, const Evidence& given);
double cond_contains(const Circuit& c, TokenId t2, TokenId t1);
// P(seq2 at p2 | seq1 at p1).
double cond_span(const Circuit& c, const TokenSeq& seq2, std::size_t p2,
                 const TokenSeq& seq1, std::size_t p1);
// P(t occurs somewhere after the span | seq observed at p).
double cond_after_span(const Circuit& c, TokenId t, const TokenSeq& seq,
                       std::size_t p);
TokenId mmap_next_at(const Circuit& c, TokenId t, std::size_t p);
TokenId mmap_after(const Circuit& c, TokenId t);

// Evidence for "the first occurrence of t is at position p": t excluded
// before p, observed at p.
Evidence first_occurrence_evidence(std::size_t n, TokenId t, std::size_t p);
// P(first occurrence of t at p) for p = 0..n-1.
std::vector<double> first_occurrence_masses(const Circuit& c, TokenId t);

// Labelled sum nodes ordered by posterior flow under a fully observed string,
// for explainability output. Empty when the string has zero probability.
struct Contribution {
  std::string label;
  double flow;
};
std::vector<Contribution> explain_evi(const Circuit& c, const TokenSeq& w,
                                      std::size_t limit = 10);

}  // namespace pcfuzz
