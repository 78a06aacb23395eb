#include "pcfuzz/testbed.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

bool check_oracle(const BugOracle& o, const TokenSeq& w) {
  if (w.empty()) return false;
  std::size_t next = 0;
  for (TokenId t : w) {
    if (next < o.ordered.size() && o.ordered[next] == t) ++next;
  }
  if (next < o.ordered.size()) return false;
  for (TokenId t : o.any) {
    if (std::find(w.begin(), w.end(), t) == w.end()) return false;
  }
  if (o.min_count) {
    auto k = static_cast<std::size_t>(
        std::count(w.begin(), w.end(), o.min_count->first));
    if (k < o.min_count->second) return false;
  }
  return true;
}

std::vector<BugOracle> parse_oracles(std::string_view text_in,
                                     const Vocabulary& vocab) {
  std::vector<BugOracle> out;
  std::set<std::string> ids;
  auto lines = text::split(text_in, '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto trimmed = text::trim(lines[ln]);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    auto fail = [&](const std::string& msg) {
      throw InputError("oracle file line " + std::to_string(ln + 1) + ": " + msg);
    };
    auto token = [&](std::string_view name) {
      auto id = vocab.find(text::trim(name));
      if (!id || *id == Vocabulary::kEndMarker) {
        fail("unknown token '" + std::string(name) + "'");
      }
      return *id;
    };
    auto fields = text::split(trimmed, '\t');
    BugOracle o;
    o.id = std::string(text::trim(fields[0]));
    if (o.id.empty()) fail("missing oracle id");
    if (!ids.insert(o.id).second) fail("duplicate oracle id '" + o.id + "'");
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const std::string field(text::trim(fields[f]));
      if (field.empty()) continue;
      auto eq = field.find('=');
      if (eq == std::string::npos) fail("expected key=value, got '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "ordered") {
        for (const auto& name : text::split(value, ',')) o.ordered.push_back(token(name));
      } else if (key == "any") {
        for (const auto& name : text::split(value, ',')) o.any.push_back(token(name));
      } else if (key == "min") {
        auto colon = value.rfind(':');
        if (colon == std::string::npos) fail("min needs TOKEN:count");
        std::size_t k = 0;
        try {
          k = text::parse_size(value.substr(colon + 1));
        } catch (const InputError& e) {
          fail(e.what());
        }
        if (k == 0) fail("min count must be >= 1");
        o.min_count = std::make_pair(token(value.substr(0, colon)), k);
      } else {
        fail("unknown oracle field '" + key + "'");
      }
    }
    if (o.ordered.empty() && o.any.empty() && !o.min_count) {
      fail("oracle '" + o.id + "' has no requirement");
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<BugOracle> load_oracles(const std::filesystem::path& path,
                                    const Vocabulary& vocab) {
  return parse_oracles(text::read_file(path), vocab);
}

std::string format_oracles(const std::vector<BugOracle>& oracles,
                           const Vocabulary& vocab) {
  std::string out;
  auto names = [&](const std::vector<TokenId>& ids) {
    std::vector<std::string> parts;
    for (TokenId t : ids) parts.push_back(vocab.name(t));
    return text::join(parts, ",");
  };
  for (const auto& o : oracles) {
    out += o.id;
    if (!o.ordered.empty()) out += "\tordered=" + names(o.ordered);
    if (!o.any.empty()) out += "\tany=" + names(o.any);
    if (o.min_count) {
      out += "\tmin=" + vocab.name(o.min_count->first) + ":" +
             std::to_string(o.min_count->second);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

class PcGenerator : public Generator {
 public:
  explicit PcGenerator(const Circuit& c) : c_(c) {}
  std::string name() const override { return "pc"; }
  std::optional<TokenSeq> generate(Rng& rng) override { return sample(c_, rng); }

 private:
  const Circuit& c_;
};

class ConditionedGenerator : public Generator {
 public:
  ConditionedGenerator(const Circuit& c, const Constraint& q,
                       const SamplerOptions& options)
      : name_("pc|" + q.to_string(c.vocab())), sampler_(c, q, options) {}
  std::string name() const override { return name_; }
  std::optional<TokenSeq> generate(Rng& rng) override {
    return sampler_.try_draw(rng);
  }

 private:
  std::string name_;
  ConditionedSampler sampler_;
};

class DerivationGenerator : public Generator {
 public:
  DerivationGenerator(const CnfGrammar& g, std::size_t max_len)
      : g_(g), max_len_(max_len) {}
  std::string name() const override { return "random"; }
  std::optional<TokenSeq> generate(Rng& rng) override {
    return random_derivation(g_, max_len_, rng);
  }

 private:
  const CnfGrammar& g_;
  std::size_t max_len_;
};

class HmmGenerator : public Generator {
 public:
  HmmGenerator(const Hmm& h, std::size_t max_len) : h_(h), max_len_(max_len) {}
  std::string name() const override { return "hmm"; }
  std::optional<TokenSeq> generate(Rng& rng) override {
    return hmm_sample(h_, max_len_, rng);
  }

 private:
  const Hmm& h_;
  std::size_t max_len_;
};

class PcfgGenerator : public Generator {
 public:
  PcfgGenerator(const Pcfg& p, std::size_t max_len) : p_(p), max_len_(max_len) {}
  std::string name() const override { return "pcfg"; }
  std::optional<TokenSeq> generate(Rng& rng) override {
    return sample_pcfg(p_, max_len_, rng);
  }

 private:
  const Pcfg& p_;
  std::size_t max_len_;
};

class ConstantGenerator : public Generator {
 public:
  explicit ConstantGenerator(TokenSeq w) : w_(std::move(w)) {}
  std::string name() const override { return "constant"; }
  std::optional<TokenSeq> generate(Rng&) override { return w_; }

 private:
  TokenSeq w_;
};

}  // namespace

std::unique_ptr<Generator> make_pc_generator(const Circuit& c) {
  return std::make_unique<PcGenerator>(c);
}

std::unique_ptr<Generator> make_conditioned_generator(
    const Circuit& c, const Constraint& q, const SamplerOptions& options) {
  return std::make_unique<ConditionedGenerator>(c, q, options);
}

std::unique_ptr<Generator> make_derivation_generator(const CnfGrammar& g,
                                                     std::size_t max_len) {
  return std::make_unique<DerivationGenerator>(g, max_len);
}

std::unique_ptr<Generator> make_hmm_generator(const Hmm& h, std::size_t max_len) {
  return std::make_unique<HmmGenerator>(h, max_len);
}

std::unique_ptr<Generator> make_pcfg_generator(const Pcfg& p, std::size_t max_len) {
  return std::make_unique<PcfgGenerator>(p, max_len);
}

std::unique_ptr<Generator> make_constant_generator(TokenSeq w) {
  return std::make_unique<ConstantGenerator>(std::move(w));
}

// ---------------------------------------------------------------------------
// Campaigns

CampaignMetrics run_campaign(Generator& gen,
                             const std::vector<BugOracle>& oracles,
                             const CampaignConfig& config) {
  if (config.count == 0) throw UsageError("campaign count must be >= 1");
  if (config.repeats == 0) throw UsageError("campaign repeats must be >= 1");
  if (!config.grammar) throw UsageError("campaign needs a grammar");
  const std::size_t num_oracles = oracles.size();

  CampaignMetrics m;
  m.generator = gen.name();
  m.count = config.count;
  m.repeats = config.repeats;
  for (const auto& o : oracles) m.per_oracle.push_back({o.id, 0.0, 0.0});

  std::map<TokenSeq, bool> executable_memo;
  auto executable = [&](const TokenSeq& w) {
    auto it = executable_memo.find(w);
    if (it != executable_memo.end()) return it->second;
    bool ok = !w.empty() && cyk_accepts(*config.grammar, w);
    if (ok && config.concretizer) {
      for (TokenId t : w) {
        if (!config.concretizer->find(t)) {
          ok = false;
          break;
        }
      }
    }
    executable_memo.emplace(w, ok);
    return ok;
  };
  auto is_sensitive = [&](const TokenSeq& w) {
    bool sensitive = false;
    for (TokenId t : w) {
      if (config.wildcard && t == *config.wildcard) return false;
      if (std::find(config.sensitive_tokens.begin(),
                    config.sensitive_tokens.end(), t) !=
          config.sensitive_tokens.end()) {
        sensitive = true;
      }
    }
    return sensitive;
  };

  const double reps = static_cast<double>(config.repeats);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    const std::uint64_t repeat_seed = Rng::derive_seed(config.seed, "repeat", r);
    std::size_t n_exec = 0;
    std::vector<std::size_t> triggers(num_oracles, 0);
    std::vector<std::set<TokenSeq>> distinct(num_oracles);
    std::set<TokenSeq> any_distinct;
    for (std::size_t i = 0; i < config.count; ++i) {
      Rng rng(Rng::derive_seed(repeat_seed, "draw", i));
      std::optional<TokenSeq> w;
      try {
        w = gen.generate(rng);
      } catch (const Error&) {
        w.reset();
      }
      if (!w || !executable(*w)) continue;
      ++n_exec;
      for (std::size_t o = 0; o < num_oracles; ++o) {
        if (check_oracle(oracles[o], *w)) {
          ++triggers[o];
          distinct[o].insert(*w);
          any_distinct.insert(*w);
        }
      }
    }
    std::size_t covered = 0;
    std::vector<std::size_t> repeat_distinct(num_oracles);
    for (std::size_t o = 0; o < num_oracles; ++o) {
      repeat_distinct[o] = distinct[o].size();
      if (triggers[o] > 0) ++covered;
      m.per_oracle[o].triggers += static_cast<double>(triggers[o]) / reps;
      m.per_oracle[o].distinct += static_cast<double>(distinct[o].size()) / reps;
      m.total_triggers += static_cast<double>(triggers[o]) / reps;
    }
    m.per_repeat_distinct.push_back(std::move(repeat_distinct));
    m.executable_rate +=
        static_cast<double>(n_exec) / static_cast<double>(config.count) / reps;
    if (num_oracles > 0) {
      m.bug_coverage +=
          static_cast<double>(covered) / static_cast<double>(num_oracles) / reps;
    }
    m.distinct_inputs += static_cast<double>(any_distinct.size()) / reps;
    if (!any_distinct.empty()) {
      std::size_t sensitive = 0;
      for (const auto& w : any_distinct) {
        if (is_sensitive(w)) ++sensitive;
      }
      m.sensitive_rate += static_cast<double>(sensitive) /
                          static_cast<double>(any_distinct.size()) / reps;
    }
  }
  return m;
}

double union_coverage(const std::vector<CampaignMetrics>& runs) {
  if (runs.empty()) return 0.0;
  const std::size_t repeats = runs[0].per_repeat_distinct.size();
  const std::size_t num_oracles = runs[0].per_oracle.size();
  if (num_oracles == 0 || repeats == 0) return 0.0;
  for (const auto& r : runs) {
    if (r.per_repeat_distinct.size() != repeats ||
        r.per_oracle.size() != num_oracles) {
      throw UsageError("runs differ in repeats or oracle sets");
    }
  }
  double total = 0.0;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    std::size_t covered = 0;
    for (std::size_t o = 0; o < num_oracles; ++o) {
      for (const auto& r : runs) {
        if (r.per_repeat_distinct[rep][o] > 0) {
          ++covered;
          break;
        }
      }
    }
    total += static_cast<double>(covered) / static_cast<double>(num_oracles);
  }
  return total / static_cast<double>(repeats);
}

Comparison compare(const CampaignMetrics& model,
                   const CampaignMetrics& baseline,
                   const std::vector<std::string>& targets) {
  if (model.per_oracle.size() != baseline.per_oracle.size()) {
    throw UsageError("cannot compare campaigns over different oracle sets");
  }
  Comparison c;
  c.model = model.generator;
  c.baseline = baseline.generator;
  double sum = 0.0;
  for (std::size_t o = 0; o < model.per_oracle.size(); ++o) {
    const auto& m = model.per_oracle[o];
    const auto& b = baseline.per_oracle[o];
    if (m.id != b.id) {
      throw UsageError("cannot compare campaigns over different oracle sets ('" +
                       m.id + "' vs '" + b.id + "')");
    }
    c.oracle_ids.push_back(m.id);
    const double d = m.distinct - b.distinct;
    c.delta.push_back(d);
    sum += d;
    if (m.distinct > 0.0 && b.distinct == 0.0) c.new_bugs.push_back(m.id);
  }
  c.mean_diversity =
      c.delta.empty() ? 0.0 : sum / static_cast<double>(c.delta.size());
  if (!targets.empty()) {
    std::size_t hit = 0;
    for (const auto& t : targets) {
      auto it = std::find(c.oracle_ids.begin(), c.oracle_ids.end(), t);
      if (it == c.oracle_ids.end()) {
        throw UsageError("alignment target '" + t + "' is not an oracle");
      }
      if (model.per_oracle[static_cast<std::size_t>(it - c.oracle_ids.begin())]
              .distinct > 0.0) {
        ++hit;
      }
    }
    c.alignment = static_cast<double>(hit) / static_cast<double>(targets.size());
  }
  return c;
}

std::string format_metrics(const CampaignMetrics& m) {
  std::string out;
  out += "generator\t" + m.generator + "\n";
  out += "count\t" + std::to_string(m.count) + "\n";
  out += "repeats\t" + std::to_string(m.repeats) + "\n";
  out += "executable_rate\t" + text::format_fixed(m.executable_rate, 3) + "\n";
  out += "bug_coverage\t" + text::format_fixed(m.bug_coverage, 3) + "\n";
  out += "total_triggers\t" + text::format_fixed(m.total_triggers, 1) + "\n";
  out += "distinct_inputs\t" + text::format_fixed(m.distinct_inputs, 1) + "\n";
  out += "sensitive_rate\t" + text::format_fixed(m.sensitive_rate, 3) + "\n";
  out += "\noracle\ttriggers\tdistinct\n";
  for (const auto& o : m.per_oracle) {
    out += o.id + "\t" + text::format_fixed(o.triggers, 1) + "\t" +
           text::format_fixed(o.distinct, 1) + "\n";
  }
  return out;
}

std::string format_comparison(const Comparison& c) {
  std::string out;
  out += "model\t" + c.model + "\n";
  out += "baseline\t" + c.baseline + "\n";
  out += "oracle\tdelta\n";
  for (std::size_t o = 0; o < c.oracle_ids.size(); ++o) {
    out += c.oracle_ids[o] + "\t" + (c.delta[o] > 0 ? "+" : "") +
           text::format_fixed(c.delta[o], 1) + "\n";
  }
  out += "mean_diversity\t" + text::format_fixed(c.mean_diversity, 1) + "\n";
  out += "new_bugs\t" + std::to_string(c.new_bugs.size());
  if (!c.new_bugs.empty()) out += "\t" + text::join(c.new_bugs, ",");
  out += "\n";
  out += "alignment\t" +
         (c.alignment ? text::format_fixed(*c.alignment, 3) : std::string("n/a")) +
         "\n";
  return out;
}

std::string format_heatmap(const std::vector<CampaignMetrics>& runs) {
  if (runs.empty()) return {};
  std::size_t id_width = 6;
  for (const auto& o : runs[0].per_oracle) id_width = std::max(id_width, o.id.size());
  auto pad_right = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto pad_left = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::vector<std::size_t> widths;
  std::string out = pad_right("oracle", id_width);
  for (const auto& r : runs) {
    widths.push_back(std::max<std::size_t>(8, r.generator.size()));
    out += "  " + pad_left(r.generator, widths.back());
  }
  out += "\n";
  for (std::size_t o = 0; o < runs[0].per_oracle.size(); ++o) {
    out += pad_right(runs[0].per_oracle[o].id, id_width);
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const double v =
          o < runs[k].per_oracle.size() ? runs[k].per_oracle[o].distinct : 0.0;
      out += "  " + pad_left(text::format_fixed(v, 1), widths[k]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace pcfuzz
