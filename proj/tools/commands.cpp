#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/cnf.hpp"
#include "pcfuzz/corpus.hpp"
#include "pcfuzz/error.hpp"
#include "pcfuzz/grammar.hpp"
#include "pcfuzz/inference.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/query.hpp"
#include "pcfuzz/sampling.hpp"
#include "pcfuzz/testbed.hpp"
#include "pcfuzz/text.hpp"

namespace fs = std::filesystem;

namespace pcfuzz::cli {

namespace {

// ---------------------------------------------------------------------------
// Shared loading helpers

CnfGrammar load_grammar_any(const fs::path& path) {
  const std::string body = text::read_file(path);
  try {
    if (text::trim(body).rfind("pcfuzz-cnf", 0) == 0) return load_cnf(body);
    return refactor_to_cnf(parse_grammar(body));
  } catch (const Error& e) {
    const std::string msg = path.string() + ": " + e.what();
    if (e.error_class() == ErrorClass::kCapacity) throw CapacityError(msg);
    throw InputError(msg);
  }
}

enum class ModelKind { kPc, kPcfg, kHmm };

struct Model {
  ModelKind kind;
  std::string name;
  std::optional<Circuit> pc;
  std::optional<Pcfg> pcfg;
  std::optional<Hmm> hmm;

  const Vocabulary& vocab() const {
    switch (kind) {
      case ModelKind::kPc: return pc->vocab();
      case ModelKind::kPcfg: return pcfg->grammar().vocab();
      case ModelKind::kHmm: return hmm->vocab();
    }
    return pc->vocab();
  }
};

const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kPc: return "pc";
    case ModelKind::kPcfg: return "pcfg";
    case ModelKind::kHmm: return "hmm";
  }
  return "?";
}

Model load_model(const fs::path& path) {
  const std::string body = text::read_file(path);
  const auto head = text::trim(body);
  Model m;
  m.name = path.stem().string();
  try {
    if (head.rfind("pcfuzz-circuit", 0) == 0) {
      m.kind = ModelKind::kPc;
      m.pc = load_circuit(body);
    } else if (head.rfind("pcfuzz-pcfg", 0) == 0) {
      m.kind = ModelKind::kPcfg;
      m.pcfg = load_pcfg(body);
    } else if (head.rfind("pcfuzz-hmm", 0) == 0) {
      m.kind = ModelKind::kHmm;
      m.hmm = load_hmm(body);
    } else {
      throw InputError("unrecognized model file");
    }
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return m;
}

Circuit load_pc(const fs::path& path) {
  Model m = load_model(path);
  if (m.kind != ModelKind::kPc) {
    throw UsageError(path.string() + " is a " + kind_name(m.kind) +
                     " model; a circuit is required");
  }
  return std::move(*m.pc);
}

std::vector<TokenSeq> read_corpora(const std::vector<std::string>& paths,
                                   const Vocabulary& vocab) {
  std::vector<TokenSeq> items;
  for (const auto& p : paths) {
    try {
      auto part = parse_corpus(text::read_file(p), vocab);
      items.insert(items.end(), part.begin(), part.end());
    } catch (const InputError& e) {
      throw InputError(p + ": " + e.what());
    }
  }
  return items;
}

std::size_t longest(const std::vector<TokenSeq>& items) {
  std::size_t n = 0;
  for (const auto& w : items) n = std::max(n, w.size());
  return n;
}

void write_or_print(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
  } else {
    text::write_file(path, body);
  }
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---------------------------------------------------------------------------
// refactor

struct RefactorArgs {
  std::string grammar;
  std::string out;
  std::size_t verify_upto = 0;
};

void cmd_refactor(const RefactorArgs& a) {
  Grammar g;
  try {
    g = parse_grammar(text::read_file(a.grammar));
  } catch (const InputError& e) {
    throw InputError(a.grammar + ":" + e.what());
  }
  auto [plain, vocab] = replace_literals(g);
  Grammar bnf = to_bnf(plain);
  CnfGrammar cnf = to_cnf(bnf, vocab);
  fs::create_directories(a.out);
  const std::string stem = fs::path(a.grammar).stem().string();
  text::write_file(fs::path(a.out) / (stem + ".bnf"), format_grammar(bnf));
  text::write_file(fs::path(a.out) / (stem + ".cnf"), save_cnf(cnf));
  std::string vocab_text;
  for (const auto& name : vocab.names()) vocab_text += name + "\n";
  text::write_file(fs::path(a.out) / (stem + ".vocab"), vocab_text);
  std::cout << "tokens\t" << vocab.size() - 1 << "\n"
            << "bnf_rules\t" << bnf.rules.size() << "\n"
            << "cnf_nonterminals\t" << cnf.num_nonterminals() << "\n"
            << "cnf_rules\t" << cnf.num_rules() << "\n";
  if (a.verify_upto > 0) {
    auto original = enumerate_language(plain, vocab, a.verify_upto);
    auto refactored = enumerate_cnf_language(cnf, a.verify_upto);
    if (original != refactored) {
      std::size_t missing = 0, extra = 0;
      for (const auto& w : original) missing += refactored.count(w) ? 0 : 1;
      for (const auto& w : refactored) extra += original.count(w) ? 0 : 1;
      throw InputError("refactoring changed the language up to length " +
                       std::to_string(a.verify_upto) + ": " +
                       std::to_string(missing) + " strings lost, " +
                       std::to_string(extra) + " strings added");
    }
    std::cout << "verified_strings\t" << original.size() << "\n";
  }
}

// ---------------------------------------------------------------------------
// compile

struct CompileArgs {
  std::string grammar;
  std::size_t max_length = 0;
  std::string out;
  std::string init = "uniform";
  std::string pcfg;
  std::uint64_t seed = 0;
  std::size_t max_nodes = 50'000'000;
};

void cmd_compile(const CompileArgs& a) {
  CnfGrammar g = load_grammar_any(a.grammar);
  CompileOptions options;
  options.max_nodes = a.max_nodes;
  Circuit c = compile(g, a.max_length, options);
  if (a.init == "uniform") {
    init_uniform(c);
  } else if (a.init == "random") {
    init_random(c, a.seed);
  } else if (a.init == "pcfg") {
    if (a.pcfg.empty()) throw UsageError("--init pcfg needs --pcfg <model>");
    Model m = load_model(a.pcfg);
    if (m.kind != ModelKind::kPcfg) throw UsageError(a.pcfg + " is not a pCFG model");
    init_tied_to_pcfg(c, *m.pcfg);
  } else {
    throw UsageError("unknown --init mode '" + a.init + "'");
  }
  auto report = validate(c);
  if (!report.ok()) {
    throw NumericError("compiled circuit is invalid:\n" + report.to_string());
  }
  text::write_file(a.out, save_circuit(c));
  std::cout << "nodes\t" << c.size() << "\n"
            << "edges\t" << c.num_edges() << "\n"
            << "free_parameters\t" << c.free_parameters() << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string kind = "pc";
  std::string model;
  std::string grammar;
  std::vector<std::string> corpus;
  std::size_t max_length = 0;
  std::size_t epochs = 20;
  double smoothing = 1e-4;
  std::uint64_t seed = 0;
  std::size_t states = 0;
  std::string out;
  std::string report;
};

void cmd_train(const TrainArgs& a) {
  EmOptions em;
  em.epochs = a.epochs;
  em.smoothing = a.smoothing;
  em.seed = a.seed;
  TrainReport report;
  std::string model_text;
  std::size_t discarded = 0;
  std::string extra;

  auto corpus_for = [&](const Vocabulary& vocab, std::size_t n) {
    auto items = read_corpora(a.corpus, vocab);
    if (n == 0) n = std::max<std::size_t>(1, longest(items));
    FilterResult f = filter_by_length(items, n, a.corpus.front());
    discarded = f.discarded;
    return f.corpus;
  };

  if (a.kind == "pc") {
    if (a.model.empty()) throw UsageError("--kind pc needs --model <circuit>");
    Circuit c = load_pc(a.model);
    Corpus corpus = corpus_for(c.vocab(), c.max_length());
    report = train_pc_em(c, corpus, em);
    model_text = save_circuit(c);
  } else if (a.kind == "pcfg") {
    Pcfg p;
    if (!a.model.empty()) {
      Model m = load_model(a.model);
      if (m.kind != ModelKind::kPcfg) throw UsageError(a.model + " is not a pCFG model");
      p = std::move(*m.pcfg);
    } else if (!a.grammar.empty()) {
      p = Pcfg(load_grammar_any(a.grammar));
    } else {
      throw UsageError("--kind pcfg needs --grammar or --model");
    }
    Corpus corpus = corpus_for(p.grammar().vocab(), a.max_length);
    report = train_pcfg(p, corpus, em);
    model_text = save_pcfg(p);
  } else if (a.kind == "hmm") {
    if (a.grammar.empty()) throw UsageError("--kind hmm needs --grammar for the vocabulary");
    CnfGrammar g = load_grammar_any(a.grammar);
    Corpus corpus = corpus_for(g.vocab(), a.max_length);
    HmmOptions ho;
    ho.states = a.states ? a.states : g.num_nonterminals();
    Hmm h = train_hmm(corpus, g.vocab(), ho, em, &report);
    model_text = save_hmm(h);
    extra = "states\t" + std::to_string(ho.states) + "\n";
  } else {
    throw UsageError("unknown --kind '" + a.kind + "' (pc, pcfg or hmm)");
  }
  text::write_file(a.out, model_text);
  const std::string report_path =
      a.report.empty() ? sibling(a.out, ".train.tsv") : a.report;
  text::write_file(report_path, report.to_tsv());
  std::cout << "kind\t" << a.kind << "\n"
            << extra << "epochs\t" << report.epochs << "\n"
            << "smoothing\t" << text::format_double(report.smoothing) << "\n"
            << "discarded_items\t" << discarded << "\n"
            << "initial_loglik\t" << text::format_double(report.loglik.front()) << "\n"
            << "final_loglik\t" << text::format_double(report.loglik.back()) << "\n"
            << "train_perplexity\t" << text::format_fixed(report.final_perplexity(), 4)
            << "\n";
}

// ---------------------------------------------------------------------------
// query

struct QueryArgs {
  std::string model;
  std::string queries;
  std::vector<std::string> inline_queries;
  bool explain = false;
  std::string out;
};

void cmd_query(const QueryArgs& a) {
  Circuit c = load_pc(a.model);
  std::string body;
  if (!a.queries.empty()) body = text::read_file(a.queries);
  for (const auto& q : a.inline_queries) body += q + "\n";
  if (text::trim(body).empty()) throw UsageError("no queries given");
  write_or_print(a.out, format_results(run_queries(c, body, a.explain), c.vocab()));
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string model;
  std::string constraint;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::size_t max_length = 0;
  std::size_t max_attempts = 200;
  std::string out;
  std::string concretizer;
  std::string concrete_out;
};

void cmd_sample(const SampleArgs& a) {
  Model m = load_model(a.model);
  const Vocabulary& vocab = m.vocab();
  Batch batch;
  if (m.kind == ModelKind::kPc) {
    std::optional<Constraint> q;
    if (!a.constraint.empty()) q = parse_constraint(a.constraint, vocab);
    SamplerOptions so;
    so.max_attempts = a.max_attempts;
    batch = sample_batch(*m.pc, q, a.count, a.seed, so);
  } else {
    if (!a.constraint.empty()) {
      throw UsageError("constraints need a circuit model");
    }
    if (a.count == 0) throw UsageError("sample count must be >= 1");
    if (a.max_length == 0) throw UsageError("--max-length is required for " +
                                            std::string(kind_name(m.kind)) +
                                            " models");
    for (std::size_t i = 0; i < a.count; ++i) {
      Rng rng(Rng::derive_seed(a.seed, "sample", i));
      batch.items.push_back(m.kind == ModelKind::kHmm
                                ? hmm_sample(*m.hmm, a.max_length, rng)
                                : sample_pcfg(*m.pcfg, a.max_length, rng));
    }
    batch.stats.requested = a.count;
    batch.stats.produced = a.count;
    batch.stats.satisfied = a.count;
    batch.stats.distinct =
        std::set<TokenSeq>(batch.items.begin(), batch.items.end()).size();
  }
  write_or_print(a.out, format_corpus(batch.items, vocab));
  std::string stats = batch.stats.to_tsv();
  if (!a.concretizer.empty()) {
    ConcretizerSpec spec = ConcretizerSpec::load(a.concretizer, vocab);
    std::string concrete;
    std::size_t sensitive = 0;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
      Rng rng(Rng::derive_seed(a.seed, "concretize", i));
      auto c = concretize_detailed(batch.items[i], spec, vocab, rng);
      concrete += c.text + "\n";
      if (c.uses_sensitive) ++sensitive;
    }
    write_or_print(a.concrete_out.empty() ? sibling(a.out, ".txt") : a.concrete_out,
                   concrete);
    stats += "concretized_sensitive\t" + std::to_string(sensitive) + "\n";
  }
  if (!a.out.empty() && a.out != "-") {
    text::write_file(sibling(a.out, ".stats.tsv"), stats);
  } else {
    std::cerr << stats;
  }
}

// ---------------------------------------------------------------------------
// perplexity

struct PerplexityArgs {
  std::vector<std::string> models;
  std::vector<std::string> test;
  std::size_t max_length = 0;
  double smooth_eval = 0.0;
  std::string out;
};

void cmd_perplexity(const PerplexityArgs& a) {
  std::vector<Model> models;
  for (const auto& p : a.models) models.push_back(load_model(p));
  std::size_t n = a.max_length;
  for (const auto& m : models) {
    if (m.kind == ModelKind::kPc && n == 0) n = m.pc->max_length();
  }
  const Vocabulary& vocab = models.front().vocab();
  for (const auto& m : models) {
    if (!(m.vocab() == vocab)) {
      throw UsageError("models '" + models.front().name + "' and '" + m.name +
                       "' use different vocabularies");
    }
  }
  auto items = read_corpora(a.test, vocab);
  if (n == 0) n = std::max<std::size_t>(1, longest(items));
  FilterResult f = filter_by_length(items, n, a.test.front());
  PerplexityOptions po;
  po.smooth_eval = a.smooth_eval;
  po.max_length = n;
  po.real_tokens = vocab.size() - 1;
  std::string out = "model\tkind\tperplexity\titems\ttokens\n";
  for (const auto& m : models) {
    LoglikFn fn;
    switch (m.kind) {
      case ModelKind::kPc:
        if (m.pc->max_length() < n) {
          throw UsageError("circuit '" + m.name + "' covers lengths up to " +
                           std::to_string(m.pc->max_length()) + " but the test "
                           "corpus is filtered to " + std::to_string(n));
        }
        fn = [&m](const TokenSeq& w) { return log_evi(*m.pc, w); };
        break;
      case ModelKind::kPcfg:
        fn = [&m, n](const TokenSeq& w) {
          return pcfg_truncated_loglik(*m.pcfg, w, n);
        };
        break;
      case ModelKind::kHmm:
        fn = [&m](const TokenSeq& w) { return hmm_loglik(*m.hmm, w); };
        break;
    }
    double ppl = 0.0;
    try {
      ppl = perplexity(fn, f.corpus, po);
    } catch (const NumericError& e) {
      throw NumericError("model '" + m.name + "': " + e.what());
    }
    out += m.name + "\t" + kind_name(m.kind) + "\t" + text::format_fixed(ppl, 4) +
           "\t" + std::to_string(f.corpus.items.size()) + "\t" +
           std::to_string(f.corpus.total_tokens()) + "\n";
  }
  write_or_print(a.out, out);
}

// ---------------------------------------------------------------------------
// campaign

struct CampaignArgs {
  std::string model;
  std::string grammar;
  std::string oracles;
  std::size_t count = 10000;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  std::vector<std::string> baselines;
  std::vector<std::string> conditions;
  std::vector<std::string> targets;
  std::string concretizer;
  std::string wildcard;
  std::size_t max_attempts = 200;
  std::string out;
};

void cmd_campaign(const CampaignArgs& a) {
  Circuit c = load_pc(a.model);
  CnfGrammar g = load_grammar_any(a.grammar);
  if (!(g.vocab() == c.vocab())) {
    throw UsageError("grammar and circuit use different vocabularies");
  }
  auto oracles = load_oracles(a.oracles, c.vocab());
  if (!a.targets.empty() && a.targets.size() != a.conditions.size()) {
    throw UsageError("give one --targets entry per --condition");
  }
  std::optional<ConcretizerSpec> spec;
  CampaignConfig config;
  config.count = a.count;
  config.repeats = a.repeats;
  config.seed = a.seed;
  config.grammar = &g;
  if (!a.concretizer.empty()) {
    spec = ConcretizerSpec::load(a.concretizer, c.vocab());
    config.concretizer = &*spec;
    config.sensitive_tokens = spec->sensitive_tokens();
  }
  if (!a.wildcard.empty()) config.wildcard = c.vocab().id(a.wildcard);

  std::vector<CampaignMetrics> runs;
  auto pc = make_pc_generator(c);
  runs.push_back(run_campaign(*pc, oracles, config));

  // Baselines keep their loaded models alive for the run.
  std::vector<CampaignMetrics> baseline_runs;
  for (const auto& b : a.baselines) {
    std::unique_ptr<Generator> gen;
    std::optional<Model> m;
    if (b == "random") {
      gen = make_derivation_generator(g, c.max_length());
    } else {
      auto colon = b.find(':');
      if (colon == std::string::npos) {
        throw UsageError("baseline must be `random` or `<kind>:<model file>`");
      }
      m = load_model(b.substr(colon + 1));
      if (!(m->vocab() == c.vocab())) {
        throw UsageError("baseline '" + b + "' uses a different vocabulary");
      }
      const std::string kind = b.substr(0, colon);
      if (kind == "hmm" && m->kind == ModelKind::kHmm) {
        gen = make_hmm_generator(*m->hmm, c.max_length());
      } else if (kind == "pcfg" && m->kind == ModelKind::kPcfg) {
        gen = make_pcfg_generator(*m->pcfg, c.max_length());
      } else if (kind == "pc" && m->kind == ModelKind::kPc) {
        gen = make_pc_generator(*m->pc);
      } else {
        throw UsageError("baseline '" + b + "' does not match its model file");
      }
    }
    CampaignMetrics metrics = run_campaign(*gen, oracles, config);
    if (m) metrics.generator = kind_name(m->kind) + std::string(":") + m->name;
    baseline_runs.push_back(std::move(metrics));
  }

  std::vector<CampaignMetrics> conditioned;
  SamplerOptions so;
  so.max_attempts = a.max_attempts;
  for (const auto& q : a.conditions) {
    auto gen = make_conditioned_generator(c, parse_constraint(q, c.vocab()), so);
    conditioned.push_back(run_campaign(*gen, oracles, config));
  }

  fs::create_directories(a.out);
  std::vector<CampaignMetrics> all = runs;
  all.insert(all.end(), baseline_runs.begin(), baseline_runs.end());
  all.insert(all.end(), conditioned.begin(), conditioned.end());
  std::string metrics_text;
  for (const auto& m : all) metrics_text += format_metrics(m) + "\n";
  text::write_file(fs::path(a.out) / "metrics.tsv", metrics_text);
  text::write_file(fs::path(a.out) / "heatmap.txt", format_heatmap(all));

  std::string comparisons;
  for (const auto& b : baseline_runs) {
    comparisons += format_comparison(compare(runs[0], b)) + "\n";
  }
  for (std::size_t k = 0; k < conditioned.size(); ++k) {
    std::vector<std::string> targets;
    if (!a.targets.empty()) targets = text::split(a.targets[k], ',');
    comparisons += format_comparison(compare(conditioned[k], runs[0], targets)) + "\n";
  }
  text::write_file(fs::path(a.out) / "comparison.tsv", comparisons);

  std::string summary = "run\texecutable_rate\tbug_coverage\tdistinct_inputs\t"
                        "sensitive_rate\n";
  for (const auto& m : all) {
    summary += m.generator + "\t" + text::format_fixed(m.executable_rate, 3) +
               "\t" + text::format_fixed(m.bug_coverage, 3) + "\t" +
               text::format_fixed(m.distinct_inputs, 1) + "\t" +
               text::format_fixed(m.sensitive_rate, 3) + "\n";
  }
  if (!conditioned.empty()) {
    summary += "conditioned_union_coverage\t" +
               text::format_fixed(union_coverage(conditioned), 3) + "\n";
  }
  text::write_file(fs::path(a.out) / "summary.tsv", summary);
  std::cout << summary << "\n" << format_heatmap(all);
}

// ---------------------------------------------------------------------------
// tokenize

struct TokenizeArgs {
  std::string grammar;
  std::string tokenizer;
  std::string input;
  std::string out;
};

void cmd_tokenize(const TokenizeArgs& a) {
  CnfGrammar g = load_grammar_any(a.grammar);
  TokenizerSpec spec = TokenizerSpec::load(a.tokenizer, g.vocab());
  auto lines = text::split(text::read_file(a.input), '\n');
  std::vector<TokenSeq> items;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      items.push_back(tokenize(spec, lines[i]));
    } catch (const InputError& e) {
      throw InputError(a.input + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  write_or_print(a.out, format_corpus(items, g.vocab()));
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Grammar-aware probabilistic circuits for fuzzing input generation"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  app.set_version_flag("--version", "pcfuzz 1.0");

  RefactorArgs refactor;
  auto* s_refactor = app.add_subcommand("refactor", "Convert an EBNF grammar to BNF and CNF");
  s_refactor->add_option("--grammar", refactor.grammar, "Grammar file")
      ->required();
  s_refactor->add_option("--out", refactor.out, "Output directory")->required();
  s_refactor->add_option("--verify-upto", refactor.verify_upto,
                         "Check language preservation up to this length");

  CompileArgs comp;
  auto* s_compile = app.add_subcommand("compile", "Build a circuit from a grammar");
  s_compile->add_option("--grammar", comp.grammar, "Grammar (EBNF or CNF file)")
      ->required();
  s_compile->add_option("--max-length", comp.max_length, "Maximum sequence length")
      ->required()->check(CLI::PositiveNumber);
  s_compile->add_option("--out", comp.out, "Circuit file")->required();
  s_compile->add_option("--init", comp.init, "uniform, random or pcfg")
      ->capture_default_str();
  s_compile->add_option("--pcfg", comp.pcfg, "pCFG model for --init pcfg")
      ;
  s_compile->add_option("--seed", comp.seed, "Seed for --init random");
  s_compile->add_option("--max-nodes", comp.max_nodes, "Node capacity bound")
      ->capture_default_str();

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "Fit a pc, pcfg or hmm model by EM");
  s_train->add_option("--kind", train.kind, "pc, pcfg or hmm")->capture_default_str();
  s_train->add_option("--model", train.model, "Starting model file")
      ;
  s_train->add_option("--grammar", train.grammar, "Grammar (pcfg, hmm)")
      ;
  s_train->add_option("--corpus", train.corpus, "Token corpus file(s)")
      ->required();
  s_train->add_option("--max-length", train.max_length,
                      "Drop longer items (pcfg, hmm; pc uses the circuit's)");
  s_train->add_option("--epochs", train.epochs, "EM epochs")->capture_default_str();
  s_train->add_option("--smoothing", train.smoothing, "Pseudo-count")
      ->capture_default_str();
  s_train->add_option("--seed", train.seed, "Seed (hmm initialization)");
  s_train->add_option("--states", train.states,
                      "HMM states (default: number of grammar nonterminals)");
  s_train->add_option("--out", train.out, "Trained model file")->required();
  s_train->add_option("--report", train.report,
                      "Training log (default: <out stem>.train.tsv)");

  QueryArgs query;
  auto* s_query = app.add_subcommand("query", "Answer EVI/MAR/COND/MMAP queries");
  s_query->add_option("--model", query.model, "Circuit file")
      ->required();
  s_query->add_option("--queries", query.queries, "Query file")
      ;
  s_query->add_option("-q,--query", query.inline_queries, "Inline query");
  s_query->add_flag("--explain", query.explain, "Print top derivation nodes for EVI");
  s_query->add_option("--out", query.out, "Result file (default: stdout)");

  SampleArgs samp;
  auto* s_sample = app.add_subcommand("sample", "Draw token sequences");
  s_sample->add_option("--model", samp.model, "Model file")
      ->required();
  s_sample->add_option("--constraint", samp.constraint,
                       "contains T | at T P | span P T... | atleast T K");
  s_sample->add_option("--count", samp.count, "Number of draws")->capture_default_str();
  s_sample->add_option("--seed", samp.seed, "Seed");
  s_sample->add_option("--max-length", samp.max_length, "Length cap (pcfg, hmm)");
  s_sample->add_option("--max-attempts", samp.max_attempts,
                       "Rejection attempts per draw for atleast")
      ->capture_default_str();
  s_sample->add_option("--out", samp.out, "Corpus output (default: stdout)");
  s_sample->add_option("--concretizer", samp.concretizer, "Concretizer spec")
      ;
  s_sample->add_option("--concrete-out", samp.concrete_out,
                       "Concrete text output (default: <out stem>.txt)");

  PerplexityArgs ppl;
  auto* s_ppl = app.add_subcommand("perplexity", "Per-token perplexity on held-out data");
  s_ppl->add_option("--model", ppl.models, "Model file(s)")
      ->required();
  s_ppl->add_option("--test", ppl.test, "Test corpus file(s)")
      ->required();
  s_ppl->add_option("--max-length", ppl.max_length,
                    "Length bound (default: the circuit's)");
  s_ppl->add_option("--smooth-eval", ppl.smooth_eval,
                    "Mix this much uniform mass into every model");
  s_ppl->add_option("--out", ppl.out, "Table output (default: stdout)");

  CampaignArgs camp;
  auto* s_camp = app.add_subcommand("campaign", "Run bug-oracle campaigns");
  s_camp->add_option("--model", camp.model, "Circuit file")
      ->required();
  s_camp->add_option("--grammar", camp.grammar, "Grammar for executability checks")
      ->required();
  s_camp->add_option("--oracles", camp.oracles, "Oracle file")
      ->required();
  s_camp->add_option("--count", camp.count, "Inputs per repeat")->capture_default_str();
  s_camp->add_option("--repeats", camp.repeats, "Repeats")->capture_default_str();
  s_camp->add_option("--seed", camp.seed, "Seed");
  s_camp->add_option("--baseline", camp.baselines,
                     "random, hmm:<file>, pcfg:<file> or pc:<file>");
  s_camp->add_option("--condition", camp.conditions, "Constraint for a conditioned run");
  s_camp->add_option("--targets", camp.targets,
                     "Comma-separated target oracles, one per --condition");
  s_camp->add_option("--concretizer", camp.concretizer, "Concretizer spec")
      ;
  s_camp->add_option("--wildcard", camp.wildcard,
                     "Token excluded from sensitive-rate counting");
  s_camp->add_option("--max-attempts", camp.max_attempts,
                     "Rejection attempts per draw for atleast")
      ->capture_default_str();
  s_camp->add_option("--out", camp.out, "Report directory")->required();

  TokenizeArgs tok;
  auto* s_tok = app.add_subcommand("tokenize", "Turn raw text lines into a token corpus");
  s_tok->add_option("--grammar", tok.grammar, "Grammar providing the vocabulary")
      ->required();
  s_tok->add_option("--tokenizer", tok.tokenizer, "Tokenizer spec")
      ->required();
  s_tok->add_option("--input", tok.input, "Raw text, one item per line")
      ->required();
  s_tok->add_option("--out", tok.out, "Corpus output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorClass::kUsage);
  }

  try {
    if (s_refactor->parsed()) cmd_refactor(refactor);
    if (s_compile->parsed()) cmd_compile(comp);
    if (s_train->parsed()) cmd_train(train);
    if (s_query->parsed()) cmd_query(query);
    if (s_sample->parsed()) cmd_sample(samp);
    if (s_ppl->parsed()) cmd_perplexity(ppl);
    if (s_camp->parsed()) cmd_campaign(camp);
    if (s_tok->parsed()) cmd_tokenize(tok);
  } catch (const Error& e) {
    std::cerr << "pcfuzz: error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "pcfuzz: error: " << e.what() << "\n";
    return static_cast<int>(ErrorClass::kInput);
  }
  return 0;
}

}  // namespace pcfuzz::cli
