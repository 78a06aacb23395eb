// Regenerates the bundled corpora under a fixture directory.
//
//   make_fixtures [fixture-dir]
//
// Every corpus is drawn from a hand-written mixture of two probabilistic
// grammars sharing one rule set. The latent component couples choices made in
// different rules, which a single pCFG cannot express. Items longer than the
// fixture's length bound are redrawn. SQL seed corpora are checked against the
// bundled oracles and must not trigger any of them.

#include <array>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "pcfuzz/cnf.hpp"
#include "pcfuzz/error.hpp"
#include "pcfuzz/grammar.hpp"
#include "pcfuzz/rng.hpp"
#include "pcfuzz/testbed.hpp"
#include "pcfuzz/text.hpp"

namespace fs = std::filesystem;
using namespace pcfuzz;

namespace {

using Words = std::vector<std::string>;
using Source = std::function<Words(Rng&)>;

bool coin(Rng& rng, double p) { return rng.uniform() < p; }

template <std::size_t N, typename... T>
const char* pick(Rng& rng, const std::array<double, N>& weights, T... names) {
  static_assert(sizeof...(T) == N);
  const char* options[] = {names...};
  return options[rng.categorical(weights)];
}

void append(Words& out, const Words& more) {
  out.insert(out.end(), more.begin(), more.end());
}

// ---------------------------------------------------------------------------
// Ground-truth sources

Words arith(Rng& rng) {
  const bool ones = coin(rng, 0.5);
  const double p_one = ones ? 0.85 : 0.2;
  const double p_more = ones ? 0.25 : 0.55;
  Words w{coin(rng, p_one) ? "ONE" : "TWO"};
  while (coin(rng, p_more)) {
    w.push_back("PLUS");
    w.push_back(coin(rng, p_one) ? "ONE" : "TWO");
  }
  return w;
}

Words json_value(Rng& rng, bool objects, int depth) {
  const double p_nest = depth == 0 ? 0.8 : 0.2;
  if (coin(rng, p_nest)) {
    const bool obj = coin(rng, objects ? 0.8 : 0.2);
    Words w{obj ? "LBRACE" : "LBRACK"};
    if (coin(rng, 0.8)) {
      for (int k = 0;; ++k) {
        if (k > 0) w.push_back("COMMA");
        if (obj) {
          w.push_back("STRING");
          w.push_back("COLON");
        }
        append(w, json_value(rng, !objects, depth + 1));
        if (!coin(rng, 0.3)) break;
      }
    }
    w.push_back(obj ? "RBRACE" : "RBRACK");
    return w;
  }
  return {coin(rng, objects ? 0.75 : 0.25) ? "STRING" : "NUMBER"};
}

Words json_doc(Rng& rng) { return json_value(rng, coin(rng, 0.5), 0); }

Words commands(Rng& rng) {
  const bool storing = coin(rng, 0.5);
  Words w{storing ? pick(rng, std::array{0.7, 0.1, 0.2}, "PUT", "GET", "DROP")
                  : pick(rng, std::array{0.1, 0.7, 0.2}, "PUT", "GET", "DROP")};
  if (coin(rng, storing ? 0.7 : 0.2)) w.push_back("KEY");
  w.push_back("ITEM");
  if (coin(rng, storing ? 0.8 : 0.3)) {
    w.push_back("AT");
    w.push_back(coin(rng, storing ? 0.8 : 0.3) ? "HOME" : "WORK");
  }
  return w;
}

// Knobs of one SQL component: probabilities of the optional clauses and of
// the alternatives inside them.
struct SqlStyle {
  double distinct = 0.1;
  double star = 0.3;
  double more_columns = 0.3;
  double ssn = 0.1;
  double join = 0.3;
  double where = 0.5;
  double more_conds = 0.3;
  double use_or = 0.3;
  std::array<double, 4> cmp = {0.25, 0.25, 0.25, 0.25};
  std::array<double, 3> value = {0.4, 0.4, 0.2};
  double order = 0.3;
  double dir = 0.5;
  double desc = 0.5;
};

const char* sql_column(Rng& rng, const SqlStyle& s) {
  return coin(rng, s.ssn) ? "SSN" : "ID";
}

Words sql(Rng& rng, const SqlStyle& s) {
  Words w{"SELECT"};
  if (coin(rng, s.distinct)) w.push_back("DISTINCT");
  if (coin(rng, s.star)) {
    w.push_back("STAR");
  } else {
    w.push_back(sql_column(rng, s));
    while (coin(rng, s.more_columns)) {
      w.push_back("COMMA");
      w.push_back(sql_column(rng, s));
    }
  }
  append(w, {"FROM", "ID"});
  if (coin(rng, s.join)) {
    append(w, {"JOIN", "ID", "ON", sql_column(rng, s), "EQ", sql_column(rng, s)});
  }
  if (coin(rng, s.where)) {
    w.push_back("WHERE");
    for (int k = 0;; ++k) {
      if (k > 0) w.push_back(coin(rng, s.use_or) ? "OR" : "AND");
      w.push_back(sql_column(rng, s));
      w.push_back(pick(rng, s.cmp, "EQ", "NE", "LT", "GT"));
      w.push_back(pick(rng, s.value, "Numeric", "Str", "NULL"));
      if (!coin(rng, s.more_conds)) break;
    }
  }
  if (coin(rng, s.order)) {
    append(w, {"ORDER", "BY", sql_column(rng, s)});
    if (coin(rng, s.dir)) w.push_back(coin(rng, s.desc) ? "DESC" : "ASC");
  }
  w.push_back("SEMI");
  return w;
}

// Reporting queries list columns, filter on numeric ranges and sort. Lookups
// select everything through a join and match strings.
SqlStyle sql_reporting() {
  SqlStyle s;
  s.distinct = 0.3;
  s.star = 0.05;
  s.more_columns = 0.6;
  s.ssn = 0.15;
  s.join = 0.1;
  s.where = 0.6;
  s.more_conds = 0.5;
  s.use_or = 0.3;
  s.cmp = {0.1, 0.1, 0.4, 0.4};
  s.value = {0.85, 0.05, 0.1};
  s.order = 0.8;
  s.dir = 0.8;
  s.desc = 0.8;
  return s;
}

SqlStyle sql_lookup() {
  SqlStyle s;
  s.distinct = 0.02;
  s.star = 0.7;
  s.more_columns = 0.2;
  s.ssn = 0.05;
  s.join = 0.7;
  s.where = 0.9;
  s.more_conds = 0.2;
  s.use_or = 0.5;
  s.cmp = {0.8, 0.1, 0.05, 0.05};
  s.value = {0.1, 0.8, 0.1};
  s.order = 0.05;
  s.dir = 0.3;
  s.desc = 0.3;
  return s;
}

Words sql_mixture(Rng& rng) {
  return coin(rng, 0.5) ? sql(rng, sql_reporting()) : sql(rng, sql_lookup());
}

// ---------------------------------------------------------------------------
// Writing

struct Target {
  const CnfGrammar* grammar;
  std::size_t max_len;
  const std::vector<BugOracle>* forbidden = nullptr;
};

std::size_t write_corpus(const fs::path& path, const Source& source,
                         const Target& t, std::size_t count, std::uint64_t seed) {
  const Vocabulary& vocab = t.grammar->vocab();
  std::string body;
  Rng rng(seed);
  std::size_t rejected = 0;
  for (std::size_t made = 0; made < count;) {
    Words w = source(rng);
    if (w.size() > t.max_len) continue;
    TokenSeq seq = vocab.parse_sequence(text::join(w, " "));
    if (!cyk_accepts(*t.grammar, seq)) {
      throw UsageError("generator produced a string outside the grammar: " +
                       text::join(w, " "));
    }
    if (t.forbidden) {
      bool triggers = false;
      for (const auto& o : *t.forbidden) triggers = triggers || check_oracle(o, seq);
      if (triggers) {
        ++rejected;
        continue;
      }
    }
    body += text::join(w, " ") + "\n";
    ++made;
  }
  text::write_file(path, body);
  std::cout << path.string() << "\t" << count << " items";
  if (t.forbidden) std::cout << "\t" << rejected << " triggering draws rejected";
  std::cout << "\n";
  return rejected;
}

CnfGrammar grammar_at(const fs::path& path) {
  return refactor_to_cnf(parse_grammar(text::read_file(path)));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("fixtures");
  try {
    CnfGrammar g_arith = grammar_at(dir / "arith" / "arith.g");
    Target t_arith{&g_arith, 5};
    write_corpus(dir / "arith" / "train.txt", arith, t_arith, 300, 11);
    write_corpus(dir / "arith" / "test.txt", arith, t_arith, 150, 12);

    CnfGrammar g_json = grammar_at(dir / "json" / "json.g");
    Target t_json{&g_json, 8};
    write_corpus(dir / "json" / "train.txt", json_doc, t_json, 3000, 21);
    write_corpus(dir / "json" / "test.txt", json_doc, t_json, 1000, 22);

    CnfGrammar g_finite = grammar_at(dir / "finite" / "finite.g");
    Target t_finite{&g_finite, 5};
    write_corpus(dir / "finite" / "train.txt", commands, t_finite, 200, 31);
    write_corpus(dir / "finite" / "test.txt", commands, t_finite, 100, 32);

    CnfGrammar g_sql = grammar_at(dir / "sql" / "sql.g");
    const auto oracles = load_oracles(dir / "sql" / "oracles.tsv", g_sql.vocab());
    Target t_sql{&g_sql, 20};
    write_corpus(dir / "sql" / "train.txt", sql_mixture, t_sql, 6000, 41);
    write_corpus(dir / "sql" / "test.txt", sql_mixture, t_sql, 500, 42);

    Target t_seed{&g_sql, 20, &oracles};
    // One fixed clause layout, varied tokens.
    auto structure = [](Rng& rng) {
      SqlStyle s;
      s.distinct = 0.0;
      s.star = 0.0;
      s.more_columns = 0.0;
      s.join = 0.0;
      s.where = 1.0;
      s.more_conds = 0.0;
      s.order = 0.0;
      s.ssn = 0.2;
      return sql(rng, s);
    };
    // Varied layouts over a reduced alphabet: no SSN, DISTINCT, Str or DESC.
    auto tokens = [](Rng& rng) {
      SqlStyle s = coin(rng, 0.5) ? sql_reporting() : sql_lookup();
      s.ssn = 0.0;
      s.distinct = 0.0;
      s.value = {0.9, 0.0, 0.1};
      s.desc = 0.0;
      return sql(rng, s);
    };
    write_corpus(dir / "sql" / "seeds_structure.txt", structure, t_seed, 200, 51);
    write_corpus(dir / "sql" / "seeds_token.txt", tokens, t_seed, 200, 52);
    write_corpus(dir / "sql" / "seeds_small.txt", sql_mixture, t_seed, 10, 53);
    write_corpus(dir / "sql" / "seeds_diverse.txt", sql_mixture, t_seed, 300, 54);
  } catch (const Error& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return e.exit_code();
  }
  return 0;
}
