#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pcfuzz/grammar.hpp"
#include "pcfuzz/rng.hpp"
#include "pcfuzz/vocabulary.hpp"

namespace pcfuzz {

using SymbolId = std::uint32_t;

struct BinaryRule {
  SymbolId lhs;
  SymbolId left;
  SymbolId right;
  bool operator==(const BinaryRule&) const = default;
};

struct TerminalRule {
  SymbolId lhs;
  TokenId token;
  bool operator==(const TerminalRule&) const = default;
};

// Grammar in Chomsky normal form. Rule ids are dense: binary rules occupy
// [0, binary_rules.size()), terminal rules follow.
class CnfGrammar {
 public:
  CnfGrammar() = default;
  CnfGrammar(Vocabulary vocab, std::vector<std::string> nonterminals,
             SymbolId entry, std::vector<BinaryRule> binary,
             std::vector<TerminalRule> terminal);

  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  std::size_t num_nonterminals() const { return nonterminals_.size(); }
  SymbolId entry() const { return entry_; }
  const std::vector<BinaryRule>& binary_rules() const { return binary_; }
  const std::vector<TerminalRule>& terminal_rules() const { return terminal_; }

  std::size_t num_rules() const { return binary_.size() + terminal_.size(); }
  bool is_binary(std::size_t rule_id) const { return rule_id < binary_.size(); }
  SymbolId rule_lhs(std::size_t rule_id) const;
  // Rule ids whose left-hand side is `a`, binary first.
  const std::vector<std::size_t>& rules_of(SymbolId a) const {
    return rules_of_[a];
  }
  std::optional<SymbolId> find_nonterminal(std::string_view name) const;
  std::string rule_to_string(std::size_t rule_id) const;

  // derivable[a][len] is true when `a` derives some string of length `len`,
  // for len in [0, max_len].
  std::vector<std::vector<bool>> derivable_lengths(std::size_t max_len) const;

  bool operator==(const CnfGrammar& other) const;

 private:
  Vocabulary vocab_;
  std::vector<std::string> nonterminals_;
  SymbolId entry_ = 0;
  std::vector<BinaryRule> binary_;
  std::vector<TerminalRule> terminal_;
  std::vector<std::vector<std::size_t>> rules_of_;
};

// Converts a BNF grammar (no groups or repetition markers, possibly with
// empty alternatives) into CNF. The empty string is dropped from the
// language. Wrapper nonterminals for tokens inside longer rules are named
// after the token; binarization introduces `<lhs>_<k>` nonterminals.
// Throws InputError when the entry nonterminal is unproductive.
CnfGrammar to_cnf(const Grammar& bnf, const Vocabulary& vocab);

// Full pipeline: literal replacement, BNF lowering and CNF conversion.
CnfGrammar refactor_to_cnf(const Grammar& g);

// CYK membership. Throws InputError for token ids outside the vocabulary.
// The empty sequence is never accepted.
bool cyk_accepts(const CnfGrammar& g, const TokenSeq& w);

// Top-down derivation choosing uniformly among each nonterminal's rules.
// Each attempt aborts once the pending derivation cannot fit in `max_len`
// tokens or exceeds 10 * max_len expansion steps; after 50 failed attempts
// returns nullopt.
std::optional<TokenSeq> random_derivation(const CnfGrammar& g,
                                          std::size_t max_len, Rng& rng);

// Every string of 1..max_len tokens the grammar derives. Throws
// CapacityError once more than `limit` strings are collected for one symbol.
std::set<TokenSeq> enumerate_cnf_language(const CnfGrammar& g,
                                          std::size_t max_len,
                                          std::size_t limit = 1'000'000);

// Versioned text serialization.
std::string save_cnf(const CnfGrammar& g);
CnfGrammar load_cnf(std::string_view text);

}  // namespace pcfuzz
