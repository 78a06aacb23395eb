#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pcfuzz/cnf.hpp"
#include "pcfuzz/error.hpp"
#include "pcfuzz/grammar.hpp"
#include "pcfuzz/rng.hpp"

using namespace pcfuzz;

namespace {

const char* kArith = R"(
eq    : digit ( PLUS digit )* ;
digit : ONE | TWO ;
ONE   : '1' ;
TWO   : '2' ;
PLUS  : '+' ;
)";

// The refactored arithmetic grammar written out by hand, including the
// single-digit alternatives the left-recursive form needs.
const char* kArithBnf = R"(
eq    : ONE | TWO | eq block ;
block : PLUS digit ;
digit : ONE | TWO ;
)";

std::set<TokenSeq> cnf_accepted(const CnfGrammar& g, std::size_t max_len) {
  std::set<TokenSeq> out;
  for (const auto& w : oracle::all_strings(g.vocab().real_tokens(), max_len)) {
    if (cyk_accepts(g, w)) out.insert(w);
  }
  return out;
}

std::set<std::string> rule_names(const Grammar& g) {
  std::set<std::string> out;
  for (const auto& r : g.rules) out.insert(r.name);
  return out;
}

}  // namespace

TEST(ParseGrammar, ArithmeticExample) {
  Grammar g = parse_grammar(kArith);
  EXPECT_EQ(rule_names(g), (std::set<std::string>{"eq", "digit"}));
  std::set<std::string> tokens;
  for (const auto& t : g.tokens) tokens.insert(t.name);
  EXPECT_EQ(tokens, (std::set<std::string>{"ONE", "TWO", "PLUS"}));
  EXPECT_EQ(g.entry, "eq");
  EXPECT_TRUE(g.has_ebnf());
}

TEST(ParseGrammar, EmptyTextHasNoEntryRule) {
  EXPECT_THROW(parse_grammar(""), InputError);
  EXPECT_THROW(parse_grammar("// only a comment\n"), InputError);
}

TEST(ParseGrammar, InlineLiteral) {
  Grammar g = parse_grammar("a : 'x' ;");
  ASSERT_EQ(g.rules.size(), 1u);
  ASSERT_EQ(g.rules[0].alternatives.size(), 1u);
  const Alternative& alt = g.rules[0].alternatives[0];
  ASSERT_EQ(alt.size(), 1u);
  EXPECT_EQ(alt[0].kind, Item::Kind::kLiteral);
  EXPECT_EQ(alt[0].text, "x");
}

TEST(ParseGrammar, ErrorsCarryPosition) {
  try {
    parse_grammar("a : B ;\nb : C c ;\n");
    FAIL() << "undefined nonterminal accepted";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_grammar("a : B ;\na : C ;"), InputError);
  EXPECT_THROW(parse_grammar("a : B"), InputError);
}

TEST(ParseGrammar, FormatRoundTrip) {
  Grammar g = parse_grammar(kArith);
  Grammar again = parse_grammar(format_grammar(g));
  EXPECT_EQ(format_grammar(again), format_grammar(g));
}

TEST(ReplaceLiterals, SingleLiteral) {
  auto [g, vocab] = replace_literals(parse_grammar("a : 'x' ;"));
  const Item& item = g.rules[0].alternatives[0][0];
  EXPECT_EQ(item.kind, Item::Kind::kToken);
  EXPECT_EQ(item.text, "X");
  EXPECT_TRUE(vocab.find("X").has_value());
  EXPECT_FALSE(g.has_literals());
}

TEST(ReplaceLiterals, NamedLiteralsLeaveGrammarUnchanged) {
  Grammar g = parse_grammar(kArith);
  auto [named, vocab] = replace_literals(g);
  EXPECT_EQ(format_grammar(named), format_grammar(g));
  EXPECT_EQ(vocab.names(), (std::vector<std::string>{"EOF", "ONE", "TWO", "PLUS"}));
}

TEST(ReplaceLiterals, SharedLiteralSharesToken) {
  Grammar g = parse_grammar("a : b ',' b ;\nb : 'x' | b ',' 'x' ;");
  auto [named, vocab] = replace_literals(g);
  // Distinct literals in the text: ',' and 'x'.
  EXPECT_EQ(vocab.size(), 1u + 2u);
  EXPECT_EQ(named.rules[0].alternatives[0][1].text,
            named.rules[1].alternatives[1][1].text);
}

TEST(ToBnf, ArithmeticMatchesHandWrittenForm) {
  auto [named, vocab] = replace_literals(parse_grammar(kArith));
  Grammar bnf = to_bnf(named);
  EXPECT_FALSE(bnf.has_ebnf());
  Grammar expected = parse_grammar(kArithBnf);
  for (std::size_t len = 1; len <= 7; ++len) {
    EXPECT_EQ(oracle::derive_language(bnf, vocab, len),
              oracle::derive_language(expected, vocab, len))
        << "length " << len;
  }
  // The repetition becomes left recursion on the rule itself.
  const Rule* eq = bnf.find_rule("eq");
  ASSERT_NE(eq, nullptr);
  bool left_recursive = false;
  for (const auto& alt : eq->alternatives) {
    left_recursive = left_recursive || (!alt.empty() && alt[0].text == "eq");
  }
  EXPECT_TRUE(left_recursive);
}

TEST(ToBnf, PlainGrammarIsIdentity) {
  Grammar g = parse_grammar(kArithBnf);
  EXPECT_EQ(format_grammar(to_bnf(g)), format_grammar(g));
}

TEST(ToBnf, OptionalBecomesTwoAlternatives) {
  Grammar g = parse_grammar("a : B? C ;");
  Vocabulary vocab = grammar_vocabulary(g);
  Grammar bnf = to_bnf(g);
  EXPECT_EQ(oracle::derive_language(bnf, vocab, 4),
            oracle::derive_language(g, vocab, 4));
  const auto lang = oracle::derive_language(g, vocab, 4);
  EXPECT_EQ(lang, (std::set<TokenSeq>{vocab.parse_sequence("B C"),
                                      vocab.parse_sequence("C")}));
}

TEST(ToCnf, CnfInputKeepsItsRules) {
  const char* text = "eq : ONE | TWO | eq block ;\nblock : plus digit ;\n"
                     "plus : PLUS ;\ndigit : ONE | TWO ;";
  Grammar g = parse_grammar(text);
  CnfGrammar cnf = to_cnf(g, grammar_vocabulary(g));
  EXPECT_EQ(cnf.num_nonterminals(), 4u);
  EXPECT_EQ(cnf.binary_rules().size(), 2u);
  EXPECT_EQ(cnf.terminal_rules().size(), 5u);
  ASSERT_TRUE(cnf.find_nonterminal("block").has_value());
  const SymbolId block = *cnf.find_nonterminal("block");
  ASSERT_EQ(cnf.rules_of(block).size(), 1u);
  const auto& r = cnf.binary_rules()[cnf.rules_of(block)[0]];
  EXPECT_EQ(cnf.nonterminals()[r.left], "plus");
  EXPECT_EQ(cnf.nonterminals()[r.right], "digit");
}

TEST(ToCnf, LongRuleIsBinarized) {
  Grammar g = parse_grammar("a : B C D ;");
  CnfGrammar cnf = to_cnf(g, grammar_vocabulary(g));
  // a -> B' a1, a1 -> C' D' plus one wrapper per token.
  EXPECT_EQ(cnf.binary_rules().size(), 2u);
  EXPECT_EQ(cnf.terminal_rules().size(), 3u);
  const Vocabulary& v = cnf.vocab();
  EXPECT_TRUE(cyk_accepts(cnf, v.parse_sequence("B C D")));
  EXPECT_FALSE(cyk_accepts(cnf, v.parse_sequence("B C")));
  EXPECT_EQ(cnf_accepted(cnf, 4), (std::set<TokenSeq>{v.parse_sequence("B C D")}));
}

TEST(ToCnf, UnitChainCollapses) {
  Grammar g = parse_grammar("a : b ;\nb : X ;");
  Vocabulary vocab = grammar_vocabulary(g);
  CnfGrammar cnf = to_cnf(g, vocab);
  ASSERT_EQ(cnf.terminal_rules().size(), 1u);
  EXPECT_EQ(cnf.terminal_rules()[0].lhs, cnf.entry());
  EXPECT_TRUE(cnf.binary_rules().empty());
  EXPECT_EQ(cnf_accepted(cnf, 3), oracle::derive_language(g, vocab, 3));
}

TEST(ToCnf, UnproductiveEntryIsRejected) {
  Grammar g = parse_grammar("a : a B ;");
  EXPECT_THROW(to_cnf(g, grammar_vocabulary(g)), InputError);
}

TEST(ToCnf, HygieneOnFixtures) {
  for (const std::string name : {"arith", "json", "finite", "sql"}) {
    const auto f = oracle::grammar_fixture(name);
    const CnfGrammar& g = f.cnf;
    EXPECT_EQ(g.vocab(), f.vocab) << name;
    // Productive: every nonterminal derives some length.
    const auto lens = g.derivable_lengths(30);
    for (SymbolId a = 0; a < g.num_nonterminals(); ++a) {
      EXPECT_TRUE(std::find(lens[a].begin(), lens[a].end(), true) != lens[a].end())
          << name << " " << g.nonterminals()[a];
    }
    // Reachable from the entry.
    std::vector<bool> seen(g.num_nonterminals(), false);
    std::vector<SymbolId> stack{g.entry()};
    seen[g.entry()] = true;
    while (!stack.empty()) {
      SymbolId a = stack.back();
      stack.pop_back();
      for (std::size_t r : g.rules_of(a)) {
        if (!g.is_binary(r)) continue;
        for (SymbolId b : {g.binary_rules()[r].left, g.binary_rules()[r].right}) {
          if (!seen[b]) {
            seen[b] = true;
            stack.push_back(b);
          }
        }
      }
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        << name;
  }
}

TEST(Cyk, ArithmeticExamples) {
  const auto f = oracle::grammar_fixture("arith");
  const Vocabulary& v = f.cnf.vocab();
  EXPECT_TRUE(cyk_accepts(f.cnf, v.parse_sequence("ONE PLUS TWO")));
  EXPECT_FALSE(cyk_accepts(f.cnf, v.parse_sequence("PLUS")));
  EXPECT_FALSE(cyk_accepts(f.cnf, {}));
  EXPECT_THROW(cyk_accepts(f.cnf, {99}), InputError);
}

TEST(Cyk, AllLengthThreeStrings) {
  const auto f = oracle::grammar_fixture("arith");
  const Vocabulary& v = f.cnf.vocab();
  std::set<TokenSeq> accepted;
  std::size_t total = 0;
  for (const auto& w : oracle::all_strings(v.real_tokens(), 3)) {
    if (w.size() != 3) continue;
    ++total;
    if (cyk_accepts(f.cnf, w)) accepted.insert(w);
  }
  EXPECT_EQ(total, 27u);
  std::set<TokenSeq> expected;
  for (const auto& w : oracle::derive_language(f.source, f.vocab, 3)) {
    if (w.size() == 3) expected.insert(w);
  }
  EXPECT_EQ(expected.size(), 4u);
  EXPECT_EQ(accepted, expected);
}

TEST(RandomDerivation, LengthOneGivesDigits) {
  const auto f = oracle::grammar_fixture("arith");
  const Vocabulary& v = f.cnf.vocab();
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto w = random_derivation(f.cnf, 1, rng);
    ASSERT_TRUE(w.has_value());
    EXPECT_TRUE(*w == v.parse_sequence("ONE") || *w == v.parse_sequence("TWO"));
  }
}

TEST(RandomDerivation, LengthTwoStaysWithinLanguage) {
  const auto f = oracle::grammar_fixture("arith");
  const auto lang = oracle::derive_language(f.source, f.vocab, 2);
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    auto w = random_derivation(f.cnf, 2, rng);
    if (w) EXPECT_TRUE(lang.count(*w));
  }
}

TEST(RandomDerivation, EveryDrawParses) {
  for (const std::string name : {"arith", "json", "sql"}) {
    const auto f = oracle::grammar_fixture(name);
    const std::size_t n = name == "sql" ? 20 : 5;
    Rng rng(5);
    std::size_t produced = 0;
    for (int i = 0; i < 1000; ++i) {
      auto w = random_derivation(f.cnf, n, rng);
      if (!w) continue;
      ++produced;
      EXPECT_LE(w->size(), n);
      EXPECT_TRUE(cyk_accepts(f.cnf, *w)) << name << ": " << f.cnf.vocab().render(*w);
    }
    EXPECT_GT(produced, 0u) << name;
  }
}

TEST(LanguagePreservation, FixturesUpToSix) {
  for (const std::string name : {"arith", "json", "finite", "sql"}) {
    const auto f = oracle::grammar_fixture(name);
    const auto r = oracle::check_language_preservation(f, 6);
    EXPECT_EQ(r.mismatches, 0u) << name << ": " << r.first_mismatch;
    EXPECT_GT(r.derived, 0u) << name;
  }
}

TEST(LanguagePreservation, LibraryEnumeratorsAgreeWithDerivation) {
  for (const std::string name : {"arith", "json", "finite", "sql"}) {
    const auto f = oracle::grammar_fixture(name);
    const auto expected = oracle::derive_language(f.source, f.vocab, 6);
    EXPECT_EQ(enumerate_language(f.source, f.vocab, 6), expected) << name;
    EXPECT_EQ(enumerate_cnf_language(f.cnf, 6), expected) << name;
  }
}

TEST(CnfFile, SaveLoadRoundTrip) {
  const auto f = oracle::grammar_fixture("json");
  CnfGrammar again = load_cnf(save_cnf(f.cnf));
  EXPECT_TRUE(again == f.cnf);
  std::string text = save_cnf(f.cnf);
  EXPECT_THROW(load_cnf(text.substr(0, text.size() / 2)), InputError);
}
