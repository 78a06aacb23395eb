#include "fixtures.hpp"

#include <cmath>

#include "oracles.hpp"

namespace oracle {

GrammarFixture grammar_from_text(const std::string& text) {
  GrammarFixture f;
  pcfuzz::Grammar parsed = pcfuzz::parse_grammar(text);
  auto [named, vocab] = pcfuzz::replace_literals(parsed);
  f.source = std::move(named);
  f.vocab = std::move(vocab);
  f.cnf = pcfuzz::refactor_to_cnf(parsed);
  return f;
}

GrammarFixture grammar_fixture(const std::string& name) {
  GrammarFixture f = grammar_from_text(read(fixture(name + "/" + name + ".g")));
  f.name = name;
  return f;
}

pcfuzz::Corpus corpus_fixture(const GrammarFixture& g, const std::string& file,
                              std::size_t n) {
  return pcfuzz::load_corpus(fixture(g.name + "/" + file), g.cnf.vocab(), n).corpus;
}

pcfuzz::Circuit circuit_for(const GrammarFixture& g, std::size_t n) {
  pcfuzz::Circuit c = pcfuzz::compile(g.cnf, n);
  pcfuzz::init_uniform(c);
  return c;
}

PreservationReport check_language_preservation(const GrammarFixture& g,
                                               std::size_t max_len,
                                               std::size_t exhaustive_limit) {
  PreservationReport r;
  const auto language = derive_language(g.source, g.vocab, max_len);
  r.derived = language.size();
  const auto alphabet = g.cnf.vocab().real_tokens();

  auto check = [&](const TokenSeq& w) {
    if (w.empty() || w.size() > max_len) return;
    ++r.checked;
    const bool expected = language.count(w) > 0;
    if (pcfuzz::cyk_accepts(g.cnf, w) != expected) {
      if (r.mismatches++ == 0) {
        r.first_mismatch = g.cnf.vocab().render(w) +
                           (expected ? " (derivable, rejected)" : " (accepted)");
      }
    }
  };

  double total = 0.0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    total += std::pow(static_cast<double>(alphabet.size()), len);
  }
  if (total <= static_cast<double>(exhaustive_limit)) {
    r.exhaustive = true;
    for (const auto& w : all_strings(alphabet, max_len)) check(w);
    return r;
  }
  std::set<TokenSeq> probes;
  for (const auto& w : language) {
    probes.insert(w);
    for (std::size_t i = 0; i <= w.size(); ++i) {
      if (i < w.size()) {
        TokenSeq del = w;
        del.erase(del.begin() + i);
        probes.insert(del);
      }
      for (TokenId t : alphabet) {
        TokenSeq ins = w;
        ins.insert(ins.begin() + i, t);
        probes.insert(ins);
        if (i < w.size()) {
          TokenSeq sub = w;
          sub[i] = t;
          probes.insert(sub);
        }
      }
    }
  }
  for (const auto& w : probes) check(w);
  return r;
}

std::set<SpanLabel> reachable_spans(const pcfuzz::CnfGrammar& g, std::size_t n) {
  const std::size_t k = g.num_nonterminals();
  // derives[a][len], by fixpoint over lengths.
  std::vector<std::vector<bool>> derives(k, std::vector<bool>(n + 1, false));
  for (const auto& t : g.terminal_rules()) derives[t.lhs][1] = true;
  for (std::size_t len = 2; len <= n; ++len) {
    for (const auto& b : g.binary_rules()) {
      for (std::size_t left = 1; left < len; ++left) {
        if (derives[b.left][left] && derives[b.right][len - left]) {
          derives[b.lhs][len] = true;
        }
      }
    }
  }
  std::set<SpanLabel> out;
  std::vector<SpanLabel> stack;
  for (std::uint32_t j = 1; j <= n; ++j) {
    if (derives[g.entry()][j]) stack.emplace_back(g.entry(), 0, j);
  }
  while (!stack.empty()) {
    SpanLabel s = stack.back();
    stack.pop_back();
    if (!out.insert(s).second) continue;
    const auto [a, i, j] = s;
    for (const auto& b : g.binary_rules()) {
      if (b.lhs != a) continue;
      for (std::uint32_t m = i + 1; m < j; ++m) {
        if (derives[b.left][m - i] && derives[b.right][j - m]) {
          stack.emplace_back(b.left, i, m);
          stack.emplace_back(b.right, m, j);
        }
      }
    }
  }
  return out;
}

}  // namespace oracle
