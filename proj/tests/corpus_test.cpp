#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pcfuzz/corpus.hpp"
#include "pcfuzz/error.hpp"

using namespace pcfuzz;

namespace {

const char* kArithTokens = "ONE\tliteral\t1\nTWO\tliteral\t2\nPLUS\tliteral\t+\n"
                           "WS\tskip\t[ ]+\n";

struct Sql {
  oracle::GrammarFixture g = oracle::grammar_fixture("sql");
  const Vocabulary& vocab() const { return g.cnf.vocab(); }
  TokenizerSpec tok = TokenizerSpec::load(oracle::fixture("sql/sql.tok"), vocab());
  ConcretizerSpec conc = ConcretizerSpec::load(oracle::fixture("sql/sql.conc"), vocab());
};

}  // namespace

TEST(Tokenize, SqlAnonymization) {
  Sql s;
  TokenSeq w = tokenize(s.tok, "SELECT name, age FROM users WHERE age > 42;");
  EXPECT_EQ(s.vocab().render(w), "SELECT ID COMMA ID FROM ID WHERE ID GT Numeric SEMI");
}

TEST(Tokenize, EmptyInput) {
  Sql s;
  EXPECT_TRUE(tokenize(s.tok, "").empty());
  EXPECT_TRUE(tokenize(s.tok, "   ").empty());
}

TEST(Tokenize, DirectLiteralMapping) {
  const auto f = oracle::grammar_fixture("arith");
  TokenizerSpec spec = TokenizerSpec::parse(kArithTokens, f.cnf.vocab());
  EXPECT_EQ(f.cnf.vocab().render(tokenize(spec, "1+2")), "ONE PLUS TWO");
  EXPECT_EQ(f.cnf.vocab().render(tokenize(spec, "2 + 1 +2")), "TWO PLUS ONE PLUS TWO");
}

TEST(Tokenize, LongestMatchThenFirstRule) {
  Sql s;
  // "ssn" ties between the SSN literal and the ID regex; "ssn_x" is longer as ID.
  EXPECT_EQ(s.vocab().render(tokenize(s.tok, "ssn ssn_x <> 'a b'")), "SSN ID NE Str");
}

TEST(Tokenize, UnmatchedTextReportsOffset) {
  Sql s;
  try {
    tokenize(s.tok, "SELECT ?");
    FAIL() << "no error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos) << e.what();
  }
}

TEST(Tokenize, UnknownTokenInSpec) {
  const auto f = oracle::grammar_fixture("arith");
  EXPECT_THROW(TokenizerSpec::parse("MINUS\tliteral\t-\n", f.cnf.vocab()), InputError);
}

TEST(FilterByLength, DropsLongItems) {
  std::vector<TokenSeq> items{{1, 1, 1}, {1, 1, 1, 1, 1}, TokenSeq(9, 1)};
  FilterResult r = filter_by_length(items, 5, "t");
  EXPECT_EQ(r.corpus.items.size(), 2u);
  EXPECT_EQ(r.discarded, 1u);
  EXPECT_EQ(r.corpus.items[0], items[0]);
  EXPECT_EQ(r.corpus.items[1], items[1]);
  EXPECT_EQ(r.corpus.max_length, 5u);
  EXPECT_EQ(r.corpus.total_tokens(), 8u);
}

TEST(FilterByLength, ShortCorpusIsUnchanged) {
  std::vector<TokenSeq> items{{1}, {2, 3}, {3, 2, 1}};
  FilterResult r = filter_by_length(items, 3);
  EXPECT_EQ(r.corpus.items, items);
  EXPECT_EQ(r.discarded, 0u);
}

TEST(FilterByLength, SqlFixtureRespectsBound) {
  Sql s;
  FilterResult r = load_corpus(oracle::fixture("sql/train.txt"), s.vocab(), 12);
  EXPECT_GT(r.discarded, 0u);
  for (const auto& w : r.corpus.items) {
    EXPECT_GE(w.size(), 1u);
    EXPECT_LE(w.size(), 12u);
  }
}

TEST(CorpusFile, RoundTrip) {
  Sql s;
  const auto items = parse_corpus(oracle::read(oracle::fixture("sql/seeds_small.txt")), s.vocab());
  EXPECT_EQ(items.size(), 10u);
  EXPECT_EQ(parse_corpus(format_corpus(items, s.vocab()), s.vocab()), items);
  EXPECT_THROW(parse_corpus("SELECT NOPE\n", s.vocab()), InputError);
}

TEST(Concretize, FixedTokensAreDeterministic) {
  Sql s;
  TokenSeq w = s.vocab().parse_sequence("SELECT STAR FROM");
  Rng a(1), b(2);
  EXPECT_EQ(concretize(w, s.conc, s.vocab(), a), concretize(w, s.conc, s.vocab(), b));
  EXPECT_EQ(concretize(w, s.conc, s.vocab(), a), "SELECT * FROM");
}

TEST(Concretize, ShapeOfSqlQuery) {
  Sql s;
  TokenSeq w = s.vocab().parse_sequence("SELECT ID COMMA ID FROM ID WHERE ID GT Numeric SEMI");
  Rng rng(9);
  const std::string text = concretize(w, s.conc, s.vocab(), rng);
  EXPECT_EQ(text.rfind("SELECT ", 0), 0u) << text;
  EXPECT_NE(text.find(", "), std::string::npos) << text;
  EXPECT_EQ(text.back(), ';') << text;
  EXPECT_EQ(text.find(" ,"), std::string::npos) << text;
}

TEST(Concretize, RoundTripsThroughTokenizer) {
  Sql s;
  const auto items = parse_corpus(oracle::read(oracle::fixture("sql/seeds_diverse.txt")), s.vocab());
  Rng rng(17);
  for (std::size_t k = 0; k < 100; ++k) {
    const TokenSeq& w = items[0];
    EXPECT_EQ(tokenize(s.tok, concretize(w, s.conc, s.vocab(), rng)), w);
  }
  for (const auto& w : items) {
    EXPECT_EQ(tokenize(s.tok, concretize(w, s.conc, s.vocab(), rng)), w);
  }
}

TEST(Concretize, SensitiveEntries) {
  Sql s;
  const auto sensitive = s.conc.sensitive_tokens();
  ASSERT_EQ(sensitive.size(), 1u);
  EXPECT_EQ(s.vocab().name(sensitive[0]), "SSN");
  Rng rng(2);
  auto with = concretize_detailed(s.vocab().parse_sequence("SELECT SSN FROM ID SEMI"),
                                  s.conc, s.vocab(), rng);
  EXPECT_TRUE(with.uses_sensitive);
  EXPECT_NE(with.text.find("ssn"), std::string::npos);
  auto without = concretize_detailed(s.vocab().parse_sequence("SELECT ID FROM ID SEMI"),
                                     s.conc, s.vocab(), rng);
  EXPECT_FALSE(without.uses_sensitive);
}

TEST(Concretize, EveryTokenNeedsADescriptor) {
  Sql s;
  EXPECT_TRUE(s.conc.missing(s.vocab()).empty());
  ConcretizerSpec partial = ConcretizerSpec::parse("SELECT\tfixed\tSELECT\n", s.vocab());
  EXPECT_FALSE(partial.missing(s.vocab()).empty());
  Rng rng(1);
  EXPECT_THROW(concretize(s.vocab().parse_sequence("SELECT STAR"), partial, s.vocab(), rng),
               InputError);
}
