// Acceptance suite. Each criterion prints one PASS/FAIL line with the
// measured quantities; the exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pcfuzz/circuit.hpp"
#include "pcfuzz/corpus.hpp"
#include "pcfuzz/error.hpp"
#include "pcfuzz/inference.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/sampling.hpp"
#include "pcfuzz/testbed.hpp"

using namespace pcfuzz;
using oracle::GrammarFixture;
using oracle::Table;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

Pcfg random_pcfg(const CnfGrammar& g, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> probs(g.num_rules());
  for (SymbolId a = 0; a < g.num_nonterminals(); ++a) {
    double total = 0.0;
    for (std::size_t r : g.rules_of(a)) total += probs[r] = 0.05 + rng.uniform();
    for (std::size_t r : g.rules_of(a)) probs[r] /= total;
  }
  return Pcfg(g, probs);
}

Table conditional(const Table& t, const std::function<bool(const TokenSeq&)>& pred) {
  Table out;
  const double z = oracle::mass(t, pred);
  for (const auto& [w, p] : t) {
    if (pred(w)) out[w] = p / z;
  }
  return out;
}

double parse_rate(const CnfGrammar& g, const std::vector<TokenSeq>& items) {
  std::size_t ok = 0;
  for (const auto& w : items) ok += !w.empty() && cyk_accepts(g, w);
  return static_cast<double>(ok) / static_cast<double>(items.size());
}

// ---------------------------------------------------------------------------
// 1. Sum of EVI over every string up to the length bound.

void normalization(Outcome& out) {
  struct Case { const char* name; std::size_t n; };
  for (const Case& k : {Case{"arith", 5}, Case{"json", 7}}) {
    const auto f = oracle::grammar_fixture(k.name);
    Circuit c = compile(f.cnf, k.n);
    init_random(c, 13);
    double total = 0.0;
    std::size_t strings = 0;
    // Odometer over every sequence of each length.
    const auto alphabet = c.vocab().real_tokens();
    for (std::size_t len = 1; len <= k.n; ++len) {
      std::vector<std::size_t> digit(len, 0);
      TokenSeq w(len, alphabet[0]);
      while (true) {
        total += evi(c, w, EvalDomain::kLinear);
        ++strings;
        std::size_t pos = 0;
        while (pos < len && ++digit[pos] == alphabet.size()) {
          digit[pos] = 0;
          w[pos] = alphabet[0];
          ++pos;
        }
        if (pos == len) break;
        w[pos] = alphabet[digit[pos]];
      }
    }
    out.detail << " " << k.name << "(n=" << k.n << ", " << strings
               << " strings): |sum-1|=" << fmt(std::abs(total - 1.0), 3) << ";";
    out.require(std::abs(total - 1.0) <= 1e-9, std::string(k.name) + " sum within 1e-9");
  }
}

// ---------------------------------------------------------------------------
// 2. Tied circuit against the inside algorithm on a finite language.

void pcfg_equivalence(Outcome& out) {
  const auto f = oracle::grammar_fixture("finite");
  std::size_t strings = 0, support = 0;
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Pcfg p = random_pcfg(f.cnf, seed);
    Circuit c = compile(f.cnf, 5);
    init_tied_to_pcfg(c, p);
    for (const auto& w : oracle::all_strings(c.vocab().real_tokens(), 5)) {
      ++strings;
      const double expected = oracle::inside(p, w);
      const double got = evi(c, w);
      if (expected == 0.0) {
        out.require(got == 0.0, "zero inside implies zero EVI");
        continue;
      }
      ++support;
      worst = std::max(worst, std::abs(got - expected) / expected);
    }
  }
  out.detail << " " << strings << " strings over 3 weightings, " << support
             << " in support; max relative error " << fmt(worst, 3);
  out.require(worst <= 1e-9, "relative error <= 1e-9");
}

// ---------------------------------------------------------------------------
// 3. Randomized queries against sums over the enumerated distribution.

struct QueryStats {
  std::size_t asked = 0;
  std::size_t disagreements = 0;
  double max_error = 0.0;
  std::size_t argmax = 0;
};

void random_queries(const GrammarFixture& f, std::size_t n, std::uint64_t seed,
                    QueryStats& qs) {
  Circuit c = compile(f.cnf, n);
  init_random(c, seed);
  const Table table = oracle::evi_table(c, oracle::derive_language(f.source, f.vocab, n));
  std::vector<TokenSeq> strings;
  for (const auto& [w, p] : table) strings.push_back(w);
  const auto tokens = c.vocab().real_tokens();
  Rng rng(seed * 7919);

  auto pick_token = [&] { return tokens[rng.below(tokens.size())]; };
  // A span cut out of a random string of the language.
  auto pick_span = [&](TokenSeq& seq, std::size_t& p) {
    const TokenSeq& w = strings[rng.below(strings.size())];
    p = rng.below(w.size());
    const std::size_t len = 1 + rng.below(std::min<std::size_t>(2, w.size() - p));
    seq.assign(w.begin() + p, w.begin() + p + len);
  };
  auto prob = [&](double lib, double brute) {
    const double e = std::abs(lib - brute);
    qs.max_error = std::max(qs.max_error, e);
    if (!(e <= 1e-8)) ++qs.disagreements;
  };
  auto argmax = [&](const std::function<TokenId()>& lib, const std::vector<double>& score) {
    ++qs.argmax;
    const auto best = oracle::argmax_lowest(score);
    try {
      const TokenId got = lib();
      if (!best || *best != got) ++qs.disagreements;
    } catch (const NumericError&) {
      if (best) ++qs.disagreements;
    }
  };
  auto mass = [&](const std::function<bool(const TokenSeq&)>& pred) {
    return oracle::mass(table, pred);
  };

  std::size_t done = 0;
  while (done < 200) {
    switch (rng.below(7)) {
      case 0: {
        const TokenId t = pick_token();
        prob(mar_contains(c, t), mass([&](const TokenSeq& w) { return oracle::contains(w, t); }));
        break;
      }
      case 1: {
        TokenSeq seq;
        std::size_t p;
        pick_span(seq, p);
        prob(mar_span(c, seq, p), mass([&](const TokenSeq& w) { return oracle::span_at(w, seq, p); }));
        break;
      }
      case 2: {
        const TokenId t1 = pick_token(), t2 = pick_token();
        const double given = mass([&](const TokenSeq& w) { return oracle::contains(w, t1); });
        if (!(given > 0.0)) continue;
        prob(cond_contains(c, t2, t1), mass([&](const TokenSeq& w) {
               return oracle::contains(w, t1) && oracle::contains(w, t2);
             }) / given);
        break;
      }
      case 3: {
        TokenSeq s1, s2;
        std::size_t p1, p2;
        pick_span(s1, p1);
        pick_span(s2, p2);
        bool conflict = false;
        for (std::size_t i = 0; i < s2.size(); ++i) {
          const std::size_t pos = p2 + i;
          if (pos >= p1 && pos < p1 + s1.size() && s1[pos - p1] != s2[i]) conflict = true;
        }
        if (conflict) continue;
        const double given = mass([&](const TokenSeq& w) { return oracle::span_at(w, s1, p1); });
        if (!(given > 0.0)) continue;
        prob(cond_span(c, s2, p2, s1, p1), mass([&](const TokenSeq& w) {
               return oracle::span_at(w, s1, p1) && oracle::span_at(w, s2, p2);
             }) / given);
        break;
      }
      case 4: {
        TokenSeq seq;
        std::size_t p;
        pick_span(seq, p);
        const TokenId t = pick_token();
        const double given = mass([&](const TokenSeq& w) { return oracle::span_at(w, seq, p); });
        prob(cond_after_span(c, t, seq, p), mass([&](const TokenSeq& w) {
               return oracle::span_at(w, seq, p) &&
                      std::find(w.begin() + p + seq.size(), w.end(), t) != w.end();
             }) / given);
        break;
      }
      case 5: {
        TokenSeq seq;
        std::size_t p;
        pick_span(seq, p);
        if (p + 1 >= n) continue;
        const TokenId t = seq[0];
        std::vector<double> score(c.vocab().size(), 0.0);
        for (TokenId v : tokens) {
          score[v] = mass([&](const TokenSeq& w) {
            return w.size() > p + 1 && w[p] == t && w[p + 1] == v;
          });
        }
        argmax([&] { return mmap_next_at(c, t, p); }, score);
        break;
      }
      case 6: {
        const TokenId t = pick_token();
        if (!(mass([&](const TokenSeq& w) { return oracle::contains(w, t); }) > 0.0)) continue;
        std::vector<double> score(c.vocab().size(), 0.0);
        for (TokenId v : tokens) {
          score[v] = mass([&](const TokenSeq& w) {
            const std::size_t first = oracle::first_index(w, t);
            return first < w.size() && std::find(w.begin() + first + 1, w.end(), v) != w.end();
          });
        }
        argmax([&] { return mmap_after(c, t); }, score);
        break;
      }
    }
    ++done;
    ++qs.asked;
  }
}

void inference_vs_enumeration(Outcome& out) {
  struct Case { const char* name; std::size_t n; };
  for (const Case& k : {Case{"arith", 5}, Case{"finite", 5}, Case{"json", 8}, Case{"sql", 12}}) {
    const auto f = oracle::grammar_fixture(k.name);
    QueryStats qs;
    random_queries(f, k.n, 17, qs);
    out.detail << " " << k.name << ": " << qs.asked << " queries (" << qs.argmax
               << " argmax), " << qs.disagreements << " disagreements, max error "
               << fmt(qs.max_error, 3) << ";";
    out.require(qs.disagreements == 0, std::string(k.name) + " agreement");
  }
}

// ---------------------------------------------------------------------------
// 4. EM traces never decrease.

bool non_decreasing(const std::vector<double>& trace, double& worst_drop) {
  bool ok = true;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double drop = trace[i - 1] - trace[i];
    worst_drop = std::max(worst_drop, drop);
    ok = ok && drop <= 1e-9 * std::max(1.0, std::abs(trace[i - 1]));
  }
  return ok;
}

void em_monotonicity(Outcome& out) {
  struct Case { const char* name; std::size_t n; };
  EmOptions o;
  o.epochs = 50;
  o.seed = 1;
  for (const Case& k : {Case{"arith", 5}, Case{"json", 8}, Case{"finite", 5}}) {
    const auto f = oracle::grammar_fixture(k.name);
    const Corpus corpus = oracle::corpus_fixture(f, "train.txt", k.n);

    Circuit c = compile(f.cnf, k.n);
    init_random(c, 1);
    const TrainReport pc = train_pc_em(c, corpus, o);

    Pcfg p = random_pcfg(f.cnf, 1);
    const TrainReport pcfg = train_pcfg(p, corpus, o);

    HmmOptions ho;
    ho.states = f.cnf.num_nonterminals();
    TrainReport hmm;
    train_hmm(corpus, f.cnf.vocab(), ho, o, &hmm);

    double d_pc = 0.0, d_pcfg = 0.0, d_hmm = 0.0;
    const bool ok_pc = non_decreasing(pc.loglik, d_pc);
    const bool ok_pcfg = non_decreasing(pcfg.loglik, d_pcfg);
    const bool ok_hmm = non_decreasing(hmm.loglik, d_hmm);
    out.detail << " " << k.name << ": max drop pc " << fmt(std::max(0.0, d_pc), 3)
               << ", pcfg " << fmt(std::max(0.0, d_pcfg), 3) << ", hmm "
               << fmt(std::max(0.0, d_hmm), 3) << ";";
    out.require(ok_pc && pc.loglik.size() == 51, std::string(k.name) + " pc");
    out.require(ok_pcfg && pcfg.loglik.size() == 51, std::string(k.name) + " pcfg");
    out.require(ok_hmm && hmm.loglik.size() == 51, std::string(k.name) + " hmm");
  }
}

// ---------------------------------------------------------------------------
// 5. Held-out perplexity, PC against pCFG, on nested JSON documents whose
// object/array choice alternates with depth.

void expressivity(Outcome& out) {
  const auto f = oracle::grammar_fixture("json");
  const std::size_t n = 8;
  std::vector<TokenSeq> pool = oracle::corpus_fixture(f, "train.txt", n).items;
  for (auto& w : oracle::corpus_fixture(f, "test.txt", n).items) pool.push_back(w);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::vector<TokenSeq> items = pool;
    std::mt19937_64 shuffler(seed);
    std::shuffle(items.begin(), items.end(), shuffler);
    const std::size_t cut = 3000;
    const Corpus train = filter_by_length({items.begin(), items.begin() + cut}, n).corpus;
    const Corpus test = filter_by_length({items.begin() + cut, items.end()}, n).corpus;

    EmOptions o;
    o.seed = seed;
    Circuit c = compile(f.cnf, n);
    init_random(c, seed);
    train_pc_em(c, train, o);
    Pcfg p = random_pcfg(f.cnf, seed);
    train_pcfg(p, train, o);

    const double pc = perplexity([&](const TokenSeq& w) { return log_evi(c, w); }, test);
    const double pcfg =
        perplexity([&](const TokenSeq& w) { return pcfg_truncated_loglik(p, w, n); }, test);
    const double gain = 1.0 - pc / pcfg;
    out.detail << " seed " << seed << ": pc " << fmt(pc) << " vs pcfg " << fmt(pcfg)
               << " (" << fmt(100.0 * gain, 3) << "% lower);";
    out.require(gain >= 0.02, "seed " + std::to_string(seed) + " gain >= 2%");
  }
}

// ---------------------------------------------------------------------------
// 6. Parse rates of PC and HMM samples on the same fixture.

void grammar_awareness(Outcome& out) {
  const auto f = oracle::grammar_fixture("json");
  const std::size_t n = 8;
  const Corpus train = oracle::corpus_fixture(f, "train.txt", n);
  Circuit c = compile(f.cnf, n);
  init_uniform(c);
  train_pc_em(c, train, EmOptions{});
  const Batch batch = sample_batch(c, std::nullopt, 10000, 1);

  HmmOptions ho;
  ho.states = f.cnf.num_nonterminals();
  const Hmm h = train_hmm(train, f.cnf.vocab(), ho, EmOptions{});
  std::vector<TokenSeq> hmm_items;
  for (std::size_t i = 0; i < 10000; ++i) {
    Rng rng(Rng::derive_seed(1, "hmm", i));
    hmm_items.push_back(hmm_sample(h, n, rng));
  }
  const double pc_rate = parse_rate(f.cnf, batch.items);
  const double hmm_rate = parse_rate(f.cnf, hmm_items);
  out.detail << " pc " << batch.items.size() << " samples parse " << fmt(100 * pc_rate, 5)
             << "%; hmm (" << ho.states << " states) " << hmm_items.size()
             << " samples parse " << fmt(100 * hmm_rate, 4) << "%";
  out.require(batch.items.size() == 10000 && pc_rate == 1.0, "pc parse rate 100%");
  out.require(hmm_rate < 1.0, "hmm parse rate < 100%");
}

// ---------------------------------------------------------------------------
// 7. Conditioned sampling against exact conditionals.

void conditioned_sampling(Outcome& out) {
  struct Case { const char* fixture; const char* constraint; };
  for (const Case& k : {Case{"arith", "contains PLUS"}, Case{"arith", "span 1 PLUS TWO"},
                        Case{"finite", "contains AT"}, Case{"finite", "span 1 KEY ITEM"}}) {
    const auto f = oracle::grammar_fixture(k.fixture);
    Circuit c = compile(f.cnf, 5);
    init_uniform(c);
    train_pc_em(c, oracle::corpus_fixture(f, "train.txt", 5), EmOptions{});
    const Constraint q = parse_constraint(k.constraint, c.vocab());
    const Batch b = sample_batch(c, q, 100000, 7);
    const Table exact = conditional(
        oracle::evi_table(c, oracle::derive_language(f.source, f.vocab, 5)),
        [&](const TokenSeq& w) { return q.satisfied_by(w); });
    const double tv = oracle::total_variation(oracle::empirical(b.items), exact);
    out.detail << " " << k.fixture << " '" << k.constraint << "': TV " << fmt(tv, 3)
               << ", satisfied " << fmt(b.stats.satisfaction_rate(), 6) << ";";
    out.require(b.items.size() == 100000, "full batch");
    out.require(tv <= 0.02, std::string(k.constraint) + " TV <= 0.02");
    out.require(b.stats.satisfaction_rate() == 1.0, "satisfaction 1.0");
  }
}

// ---------------------------------------------------------------------------
// 8. Campaign direction on the SQL fixture.

void campaign(Outcome& out) {
  const auto f = oracle::grammar_fixture("sql");
  const std::size_t n = 20;
  const auto oracles = load_oracles(oracle::fixture("sql/oracles.tsv"), f.cnf.vocab());
  Circuit c = compile(f.cnf, n);
  init_uniform(c);
  train_pc_em(c, oracle::corpus_fixture(f, "seeds_diverse.txt", n), EmOptions{});

  const std::vector<std::string> conditions = {"contains SSN", "contains DESC", "contains Str"};
  const std::string dependency_oracle = "BUG01";
  std::size_t held_a = 0, held_b = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CampaignConfig cfg;
    cfg.count = 10000;
    cfg.repeats = 1;
    cfg.seed = seed;
    cfg.grammar = &f.cnf;

    auto pc_gen = make_pc_generator(c);
    const CampaignMetrics pc = run_campaign(*pc_gen, oracles, cfg);
    auto random_gen = make_derivation_generator(f.cnf, n);
    const CampaignMetrics random = run_campaign(*random_gen, oracles, cfg);

    // The conditioned campaign splits the same budget across its constraints.
    std::vector<CampaignMetrics> conditioned;
    CampaignConfig share = cfg;
    share.count = cfg.count / conditions.size();
    for (const auto& text : conditions) {
      auto gen = make_conditioned_generator(c, parse_constraint(text, c.vocab()));
      conditioned.push_back(run_campaign(*gen, oracles, share));
    }
    const double cond_cov = union_coverage(conditioned);

    std::size_t dep = 0;
    while (oracles[dep].id != dependency_oracle) ++dep;
    const double d_pc = pc.per_oracle[dep].distinct;
    const double d_random = random.per_oracle[dep].distinct;

    held_a += cond_cov >= pc.bug_coverage;
    held_b += d_pc >= d_random;
    out.detail << " seed " << seed << ": coverage conditioned " << fmt(cond_cov, 3) << " vs pc "
               << fmt(pc.bug_coverage, 3) << ", " << dependency_oracle << " distinct pc "
               << d_pc << " vs random " << d_random << ";";
  }
  out.detail << " (a) held " << held_a << "/3, (b) held " << held_b << "/3";
  out.require(held_a >= 2, "(a) in >= 2 of 3");
  out.require(held_b >= 2, "(b) in >= 2 of 3");
}

// ---------------------------------------------------------------------------
// 9. Comparison arithmetic on a hand-computed three-oracle example.

void metric_algebra(Outcome& out) {
  auto metrics = [](const std::string& name, std::vector<double> distinct) {
    CampaignMetrics m;
    m.generator = name;
    m.repeats = 1;
    m.per_repeat_distinct.emplace_back();
    const char* ids[] = {"BUG_A", "BUG_B", "BUG_C"};
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      m.per_oracle.push_back({ids[i], distinct[i], distinct[i]});
      m.per_repeat_distinct[0].push_back(static_cast<std::size_t>(distinct[i]));
    }
    return m;
  };
  // Model distinct (5, 0, 2), baseline (3, 1, 0), targets {BUG_A, BUG_B}.
  // Delta = (2, -1, 2), mean = 1, new bugs = {BUG_C}, alignment = 1/2.
  const Comparison cmp =
      compare(metrics("conditioned", {5, 0, 2}), metrics("baseline", {3, 1, 0}), {"BUG_A", "BUG_B"});
  out.require(cmp.delta == std::vector<double>{2, -1, 2}, "delta");
  out.require(cmp.mean_diversity == 1.0, "mean diversity");
  out.require(cmp.new_bugs == std::vector<std::string>{"BUG_C"}, "new bugs");
  out.require(cmp.alignment && *cmp.alignment == 0.5, "alignment");
  double sum = 0.0;
  for (double d : cmp.delta) sum += d;
  out.require(sum / 3.0 == cmp.mean_diversity, "mean recomputed from deltas");

  const Comparison same = compare(metrics("m", {5, 0, 2}), metrics("m", {5, 0, 2}));
  out.require(same.delta == std::vector<double>{0, 0, 0} && same.mean_diversity == 0.0 &&
                  same.new_bugs.empty(),
              "identical metrics");
  out.detail << " delta (" << cmp.delta[0] << "," << cmp.delta[1] << "," << cmp.delta[2]
             << "), mean " << cmp.mean_diversity << ", new " << cmp.new_bugs.size()
             << ", alignment " << (cmp.alignment ? *cmp.alignment : -1.0);
}

// ---------------------------------------------------------------------------
// 10. Round trips.

void round_trips(Outcome& out) {
  struct Case { const char* name; std::size_t n; };
  for (const Case& k : {Case{"arith", 5}, Case{"json", 8}, Case{"finite", 5}, Case{"sql", 20}}) {
    const auto f = oracle::grammar_fixture(k.name);
    Circuit c = compile(f.cnf, k.n);
    init_random(c, 5);
    const Circuit again = load_circuit(save_circuit(c));
    out.require(again == c && again.edge_weights() == c.edge_weights(),
                std::string(k.name) + " circuit round trip");
    const auto r = oracle::check_language_preservation(f, 6);
    out.detail << " " << k.name << ": " << r.checked << " strings checked ("
               << (r.exhaustive ? "exhaustive" : "neighbourhood") << "), " << r.mismatches
               << " mismatches;";
    out.require(r.mismatches == 0, std::string(k.name) + " language preservation");
  }

  const auto f = oracle::grammar_fixture("sql");
  const Vocabulary& v = f.cnf.vocab();
  const TokenizerSpec tok = TokenizerSpec::load(oracle::fixture("sql/sql.tok"), v);
  const ConcretizerSpec conc = ConcretizerSpec::load(oracle::fixture("sql/sql.conc"), v);
  Circuit c = compile(f.cnf, 20);
  init_uniform(c);
  train_pc_em(c, oracle::corpus_fixture(f, "train.txt", 20), EmOptions{});
  const Batch b = sample_batch(c, std::nullopt, 10000, 3);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    Rng rng(Rng::derive_seed(3, "concretize", i));
    mismatched += tokenize(tok, concretize(b.items[i], conc, v, rng)) != b.items[i];
  }
  out.detail << " sql concretize/tokenize: " << b.items.size() << " samples, " << mismatched
             << " mismatches";
  out.require(b.items.size() == 10000 && mismatched == 0, "concretize/tokenize identity");
}

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;
  void (*run)(Outcome&);
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "normalization", 30, normalization},
      {2, "pcfg-equivalence", 10, pcfg_equivalence},
      {3, "inference-vs-enumeration", 60, inference_vs_enumeration},
      {4, "em-monotonicity", 0, em_monotonicity},
      {5, "expressivity", 180, expressivity},
      {6, "grammar-aware-sampling", 0, grammar_awareness},
      {7, "conditioned-sampling", 0, conditioned_sampling},
      {8, "campaign-direction", 300, campaign},
      {9, "metric-algebra", 0, metric_algebra},
      {10, "round-trips", 0, round_trips},
  };
  int failed = 0;
  for (const auto& k : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      k.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double seconds = elapsed(start);
    if (k.budget_seconds > 0 && seconds >= k.budget_seconds) {
      out.pass = false;
      out.detail << " [over the " << k.budget_seconds << " s budget]";
    }
    failed += !out.pass;
    std::printf("%s  %2d %-26s (%.1f s)%s\n", out.pass ? "PASS" : "FAIL", k.number, k.name,
                seconds, out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
