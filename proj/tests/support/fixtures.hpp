#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/cnf.hpp"
#include "pcfuzz/corpus.hpp"
#include "pcfuzz/grammar.hpp"

namespace oracle {

// A bundled grammar in both forms: the original rules with literals named,
// and the CNF the library derives from them.
struct GrammarFixture {
  std::string name;
  pcfuzz::Grammar source;
  pcfuzz::Vocabulary vocab;
  pcfuzz::CnfGrammar cnf;
};

GrammarFixture grammar_fixture(const std::string& name);
GrammarFixture grammar_from_text(const std::string& text);

// Corpus file under fixtures/<name>/ filtered to n tokens.
pcfuzz::Corpus corpus_fixture(const GrammarFixture& g, const std::string& file,
                              std::size_t n);

// Compiled circuit over the fixture's CNF with uniform weights.
pcfuzz::Circuit circuit_for(const GrammarFixture& g, std::size_t n);

// Membership agreement between CYK on the CNF and derivation of the original
// grammar for strings of 1..max_len tokens. Exhaustive over the vocabulary
// when it has at most `exhaustive_limit` strings; otherwise every derived
// string plus every single-token substitution, insertion and deletion of
// one is checked.
struct PreservationReport {
  std::size_t derived = 0;
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  bool exhaustive = false;
  std::string first_mismatch;
};
PreservationReport check_language_preservation(
    const GrammarFixture& g, std::size_t max_len,
    std::size_t exhaustive_limit = 2'000'000);

// (symbol, begin, end) triples a top-down CYK chart reaches from the entry:
// spans whose symbol derives a string of that length, linked from a root span
// (entry, 0, j) through binary rules whose both halves are derivable.
using SpanLabel = std::tuple<pcfuzz::SymbolId, std::uint32_t, std::uint32_t>;
std::set<SpanLabel> reachable_spans(const pcfuzz::CnfGrammar& g, std::size_t n);

}  // namespace oracle
