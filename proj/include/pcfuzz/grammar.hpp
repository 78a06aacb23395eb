#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcfuzz/vocabulary.hpp"

namespace pcfuzz {

struct SourceLoc {
  int line = 0;
  int column = 0;
};

enum class Repeat { kNone, kStar, kPlus, kOptional };

struct Item;
using Alternative = std::vector<Item>;

// One element of a rule body. Nonterminal names start lowercase, token names
// uppercase; literals are quoted text; groups are parenthesized alternatives.
struct Item {
  enum class Kind { kNonterminal, kToken, kLiteral, kGroup };

  Kind kind = Kind::kNonterminal;
  std::string text;
  std::vector<Alternative> alternatives;
  Repeat repeat = Repeat::kNone;
  SourceLoc loc;

  static Item nonterminal(std::string name) {
    return Item{Kind::kNonterminal, std::move(name), {}, Repeat::kNone, {}};
  }
  static Item token(std::string name) {
    return Item{Kind::kToken, std::move(name), {}, Repeat::kNone, {}};
  }
};

struct Rule {
  std::string name;
  std::vector<Alternative> alternatives;
  SourceLoc loc;
};

// Lexer-level declaration `NAME : 'text' ;`. Tokens referenced but never
// declared get a declaration without literal text.
struct TokenDecl {
  std::string name;
  std::optional<std::string> literal;
  SourceLoc loc;
};

struct Grammar {
  std::vector<Rule> rules;
  std::vector<TokenDecl> tokens;
  std::string entry;

  const Rule* find_rule(std::string_view name) const;
  const TokenDecl* find_token(std::string_view name) const;
  // Structural EBNF features remaining (groups, repetition markers).
  bool has_ebnf() const;
  bool has_literals() const;
};

// Parses the line-oriented grammar format:
//   name : alt ( '|' alt )* ;
// First parser rule is the entry. `//` and `/* */` comments are skipped.
// Throws InputError carrying line:column for syntax errors, undefined
// nonterminals and duplicate definitions.
Grammar parse_grammar(std::string_view text);

// Renders a grammar back into the file format accepted by parse_grammar.
std::string format_grammar(const Grammar& g);

// Replaces quoted literals with named tokens. A literal equal to the text of a
// declared token reuses that token; otherwise a fresh name is derived from the
// literal. The vocabulary lists declared tokens first, then the rest in order
// of first reference.
std::pair<Grammar, Vocabulary> replace_literals(const Grammar& g);

// Vocabulary of a literal-free grammar: declared tokens in declaration order.
Vocabulary grammar_vocabulary(const Grammar& g);

// Lowers groups, `?`, `*` and `+` into plain alternatives and fresh
// left-recursive nonterminals. The result may contain empty alternatives.
Grammar to_bnf(const Grammar& g);

// Every non-empty string of at most max_len tokens derivable from the entry
// rule, computed by fixpoint iteration directly on the (possibly EBNF)
// rules. Requires a literal-free grammar whose tokens are in `vocab`. Throws
// CapacityError once more than `limit` strings are collected for one symbol.
std::set<TokenSeq> enumerate_language(const Grammar& g, const Vocabulary& vocab,
                                      std::size_t max_len,
                                      std::size_t limit = 1'000'000);

}  // namespace pcfuzz
