#include <cmath>
#include <limits>
#include <map>

#include "pcfuzz/error.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dense chart over (symbol, begin, length).
class Chart {
 public:
  Chart(std::size_t symbols, std::size_t n)
      : n_(n), data_(symbols * n * (n + 1), 0.0) {}
  double& at(SymbolId a, std::size_t i, std::size_t len) {
    return data_[(a * n_ + i) * (n_ + 1) + len];
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

Chart inside(const Pcfg& p, const TokenSeq& w) {
  const CnfGrammar& g = p.grammar();
  const std::size_t n = w.size();
  Chart beta(g.num_nonterminals(), n);
  const std::size_t nb = g.binary_rules().size();
  for (std::size_t k = 0; k < g.terminal_rules().size(); ++k) {
    const auto& tr = g.terminal_rules()[k];
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == tr.token) beta.at(tr.lhs, i, 1) += p.prob(nb + k);
    }
  }
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      for (std::size_t r = 0; r < nb; ++r) {
        const auto& br = g.binary_rules()[r];
        const double pr = p.prob(r);
        if (pr == 0.0) continue;
        double s = 0.0;
        for (std::size_t left = 1; left < len; ++left) {
          s += beta.at(br.left, i, left) * beta.at(br.right, i + left, len - left);
        }
        beta.at(br.lhs, i, len) += pr * s;
      }
    }
  }
  return beta;
}

void check_sequence(const Pcfg& p, const TokenSeq& w) {
  if (w.empty()) throw InputError("log-likelihood of an empty sequence");
  for (TokenId t : w) {
    if (t == Vocabulary::kEndMarker || t >= p.grammar().vocab().size()) {
      throw InputError("token id " + std::to_string(t) + " outside vocabulary");
    }
  }
}

}  // namespace

Pcfg::Pcfg(CnfGrammar g) : g_(std::move(g)) {
  probs_.assign(g_.num_rules(), 0.0);
  for (SymbolId a = 0; a < g_.num_nonterminals(); ++a) {
    const auto& rules = g_.rules_of(a);
    for (std::size_t r : rules) {
      probs_[r] = 1.0 / static_cast<double>(rules.size());
    }
  }
}

Pcfg::Pcfg(CnfGrammar g, std::vector<double> probs) : g_(std::move(g)) {
  set_probs(std::move(probs));
}

void Pcfg::set_probs(std::vector<double> probs) {
  if (probs.size() != g_.num_rules()) {
    throw UsageError("expected " + std::to_string(g_.num_rules()) +
                     " rule probabilities, got " + std::to_string(probs.size()));
  }
  for (SymbolId a = 0; a < g_.num_nonterminals(); ++a) {
    double total = 0.0;
    for (std::size_t r : g_.rules_of(a)) {
      if (!std::isfinite(probs[r]) || probs[r] < 0.0) {
        throw NumericError("rule probability must be finite and >= 0: " +
                           g_.rule_to_string(r));
      }
      total += probs[r];
    }
    if (!g_.rules_of(a).empty() && std::abs(total - 1.0) > 1e-9) {
      throw NumericError("probabilities of '" + g_.nonterminals()[a] +
                         "' sum to " + text::format_double(total));
    }
  }
  probs_ = std::move(probs);
}

std::size_t Pcfg::free_parameters() const {
  std::size_t k = 0;
  for (SymbolId a = 0; a < g_.num_nonterminals(); ++a) {
    if (!g_.rules_of(a).empty()) k += g_.rules_of(a).size() - 1;
  }
  return k;
}

std::vector<std::vector<double>> Pcfg::length_masses(std::size_t n) const {
  std::vector<std::vector<double>> m(g_.num_nonterminals(),
                                     std::vector<double>(n + 1, 0.0));
  const std::size_t nb = g_.binary_rules().size();
  if (n >= 1) {
    for (std::size_t k = 0; k < g_.terminal_rules().size(); ++k) {
      m[g_.terminal_rules()[k].lhs][1] += probs_[nb + k];
    }
  }
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t r = 0; r < nb; ++r) {
      const auto& br = g_.binary_rules()[r];
      double s = 0.0;
      for (std::size_t left = 1; left < len; ++left) {
        s += m[br.left][left] * m[br.right][len - left];
      }
      m[br.lhs][len] += probs_[r] * s;
    }
  }
  return m;
}

double pcfg_loglik(const Pcfg& p, const TokenSeq& w) {
  check_sequence(p, w);
  Chart beta = inside(p, w);
  const double z = beta.at(p.grammar().entry(), 0, w.size());
  return z > 0.0 ? std::log(z) : kNegInf;
}

double pcfg_truncated_loglik(const Pcfg& p, const TokenSeq& w, std::size_t n) {
  if (w.size() > n) return kNegInf;
  const double ll = pcfg_loglik(p, w);
  if (ll == kNegInf) return ll;
  const auto m = p.length_masses(n);
  double total = 0.0;
  for (std::size_t len = 1; len <= n; ++len) total += m[p.grammar().entry()][len];
  return ll - std::log(total);
}

TrainReport train_pcfg(Pcfg& p, const Corpus& corpus, const EmOptions& options) {
  if (options.epochs == 0) throw UsageError("training needs at least one epoch");
  if (options.smoothing < 0.0) throw UsageError("smoothing must be >= 0");
  const CnfGrammar& g = p.grammar();
  std::map<TokenSeq, std::pair<std::size_t, double>> unique;
  for (std::size_t k = 0; k < corpus.items.size(); ++k) {
    check_sequence(p, corpus.items[k]);
    auto [it, inserted] = unique.emplace(corpus.items[k], std::make_pair(k, 0.0));
    it->second.second += 1.0;
  }
  const std::size_t nb = g.binary_rules().size();

  TrainReport report;
  report.epochs = options.epochs;
  report.smoothing = options.smoothing;
  report.tokens = corpus.total_tokens();
  std::vector<double> counts(g.num_rules());

  auto e_step = [&]() {
    std::fill(counts.begin(), counts.end(), 0.0);
    double ll = 0.0;
    for (const auto& [w, info] : unique) {
      const double mult = info.second;
      const std::size_t n = w.size();
      Chart beta = inside(p, w);
      const double z = beta.at(g.entry(), 0, n);
      if (!(z > 0.0)) {
        throw InputError("corpus item " + std::to_string(info.first + 1) +
                         " ('" + g.vocab().render(w) +
                         "') cannot be parsed by the grammar");
      }
      ll += mult * std::log(z);
      Chart alpha(g.num_nonterminals(), n);
      alpha.at(g.entry(), 0, n) = 1.0;
      for (std::size_t len = n; len >= 2; --len) {
        for (std::size_t i = 0; i + len <= n; ++i) {
          for (std::size_t r = 0; r < nb; ++r) {
            const auto& br = g.binary_rules()[r];
            const double out = alpha.at(br.lhs, i, len);
            if (out == 0.0) continue;
            const double pr = p.prob(r);
            double expected = 0.0;
            for (std::size_t left = 1; left < len; ++left) {
              const double in_l = beta.at(br.left, i, left);
              const double in_r = beta.at(br.right, i + left, len - left);
              alpha.at(br.left, i, left) += pr * out * in_r;
              alpha.at(br.right, i + left, len - left) += pr * out * in_l;
              expected += in_l * in_r;
            }
            counts[r] += mult * pr * out * expected / z;
          }
        }
      }
      for (std::size_t k = 0; k < g.terminal_rules().size(); ++k) {
        const auto& tr = g.terminal_rules()[k];
        for (std::size_t i = 0; i < n; ++i) {
          if (w[i] != tr.token) continue;
          counts[nb + k] += mult * alpha.at(tr.lhs, i, 1) * p.prob(nb + k) / z;
        }
      }
    }
    return ll;
  };

  auto m_step = [&]() {
    std::vector<double> probs = p.probs();
    for (SymbolId a = 0; a < g.num_nonterminals(); ++a) {
      const auto& rules = g.rules_of(a);
      double total = 0.0;
      for (std::size_t r : rules) total += counts[r];
      const double denom =
          total + options.smoothing * static_cast<double>(rules.size());
      if (!(denom > 0.0)) continue;
      for (std::size_t r : rules) {
        probs[r] = (counts[r] + options.smoothing) / denom;
      }
    }
    p.set_probs(std::move(probs));
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    report.loglik.push_back(e_step());
    m_step();
  }
  report.loglik.push_back(e_step());
  return report;
}

TokenSeq sample_pcfg(const Pcfg& p, std::size_t n, Rng& rng) {
  const CnfGrammar& g = p.grammar();
  const auto m = p.length_masses(n);
  std::vector<double> len_w(n + 1, 0.0);
  for (std::size_t len = 1; len <= n; ++len) len_w[len] = m[g.entry()][len];
  double total = 0.0;
  for (double x : len_w) total += x;
  if (!(total > 0.0)) {
    throw NumericError("pCFG assigns no mass to lengths <= " + std::to_string(n));
  }
  const std::size_t nb = g.binary_rules().size();
  TokenSeq out;
  std::vector<double> scores;
  struct Choice {
    std::size_t rule;
    std::size_t left;
  };
  std::vector<Choice> choices;
  // Left-to-right expansion with an explicit stack keeps output order.
  std::vector<std::pair<SymbolId, std::size_t>> stack{
      {g.entry(), rng.categorical(len_w)}};
  while (!stack.empty()) {
    auto [a, len] = stack.back();
    stack.pop_back();
    scores.clear();
    choices.clear();
    for (std::size_t r : g.rules_of(a)) {
      if (g.is_binary(r)) {
        const auto& br = g.binary_rules()[r];
        for (std::size_t left = 1; left < len; ++left) {
          scores.push_back(p.prob(r) * m[br.left][left] * m[br.right][len - left]);
          choices.push_back({r, left});
        }
      } else if (len == 1) {
        scores.push_back(p.prob(r));
        choices.push_back({r, 0});
      }
    }
    const Choice ch = choices[rng.categorical(scores)];
    if (g.is_binary(ch.rule)) {
      const auto& br = g.binary_rules()[ch.rule];
      stack.emplace_back(br.right, len - ch.left);
      stack.emplace_back(br.left, ch.left);
    } else {
      out.push_back(g.terminal_rules()[ch.rule - nb].token);
    }
  }
  return out;
}

std::string save_pcfg(const Pcfg& p) {
  std::string out = "pcfuzz-pcfg 1\nprobs " + std::to_string(p.probs().size()) + "\n";
  for (double x : p.probs()) out += text::format_double(x) + "\n";
  out += save_cnf(p.grammar());
  return out;
}

Pcfg load_pcfg(std::string_view text_in) {
  auto lines = text::split(text_in, '\n');
  std::size_t pos = 0;
  auto next = [&]() -> std::string {
    while (pos < lines.size()) {
      std::string l(text::trim(lines[pos++]));
      if (!l.empty()) return l;
    }
    throw InputError("pCFG file ends early");
  };
  auto fail = [&](const std::string& msg) {
    throw InputError("pCFG file line " + std::to_string(pos) + ": " + msg);
  };
  auto header = text::split_whitespace(next());
  if (header.size() != 2 || header[0] != "pcfuzz-pcfg") fail("not a pCFG file");
  if (header[1] != "1") fail("unsupported pCFG format version " + header[1]);
  auto count_line = text::split_whitespace(next());
  if (count_line.size() != 2 || count_line[0] != "probs") fail("expected probs <count>");
  std::vector<double> probs;
  try {
    const std::size_t count = text::parse_size(count_line[1]);
    for (std::size_t k = 0; k < count; ++k) probs.push_back(text::parse_double(next()));
  } catch (const InputError& e) {
    fail(e.what());
  }
  std::string rest;
  for (std::size_t k = pos; k < lines.size(); ++k) rest += lines[k] + "\n";
  return Pcfg(load_cnf(rest), std::move(probs));
}

}  // namespace pcfuzz
