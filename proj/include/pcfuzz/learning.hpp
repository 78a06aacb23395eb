#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/cnf.hpp"
#include "pcfuzz/corpus.hpp"
#include "pcfuzz/rng.hpp"

namespace pcfuzz {

struct EmOptions {
  std::size_t epochs = 20;
  // Pseudo-count added to every expected count before normalizing.
  double smoothing = 1e-4;
  std::uint64_t seed = 0;
};

struct TrainReport {
  // loglik[0] is the corpus log-likelihood before training, loglik[k] the
  // value after epoch k.
  std::vector<double> loglik;
  std::size_t epochs = 0;
  double smoothing = 0.0;
  std::size_t tokens = 0;

  double final_perplexity() const;
  // Tab-separated `epoch<TAB>loglik` table with a header line.
  std::string to_tsv() const;
};

// Expected-flow EM over the circuit's sum-edge weights, root included.
// Throws UsageError for epochs == 0 and InputError naming the first corpus
// item that is longer than n or has probability zero.
TrainReport train_pc_em(Circuit& c, const Corpus& corpus,
                        const EmOptions& options);

// ---------------------------------------------------------------------------
// Probabilistic context-free grammar

class Pcfg {
 public:
  Pcfg() = default;
  // Uniform probabilities per nonterminal.
  explicit Pcfg(CnfGrammar g);
  Pcfg(CnfGrammar g, std::vector<double> probs);

  const CnfGrammar& grammar() const { return g_; }
  double prob(std::size_t rule) const { return probs_[rule]; }
  const std::vector<double>& probs() const { return probs_; }
  void set_probs(std::vector<double> probs);
  // Rule probabilities minus one per nonterminal with rules.
  std::size_t free_parameters() const;

  // mass[a][len]: probability that `a` derives some string of exactly `len`
  // tokens, len in [0, n] (mass[a][0] is always 0).
  std::vector<std::vector<double>> length_masses(std::size_t n) const;

 private:
  CnfGrammar g_;
  std::vector<double> probs_;
};

// Inside-outside EM starting from the current probabilities. Throws
// InputError naming the first item the grammar cannot parse.
TrainReport train_pcfg(Pcfg& p, const Corpus& corpus, const EmOptions& options);

// Log inside probability; -inf when the grammar cannot derive w.
double pcfg_loglik(const Pcfg& p, const TokenSeq& w);
// Log probability under the pCFG conditioned on length <= n.
double pcfg_truncated_loglik(const Pcfg& p, const TokenSeq& w, std::size_t n);
// Exact draw from the pCFG conditioned on length <= n. Throws NumericError
// when no string of length <= n has positive probability.
TokenSeq sample_pcfg(const Pcfg& p, std::size_t n, Rng& rng);

std::string save_pcfg(const Pcfg& p);
Pcfg load_pcfg(std::string_view text);

// ---------------------------------------------------------------------------
// Hidden Markov model with explicit termination

class Hmm {
 public:
  Hmm() = default;
  // Random positive parameters from `seed`.
  Hmm(std::size_t states, Vocabulary vocab, std::uint64_t seed);

  std::size_t states() const { return states_; }
  const Vocabulary& vocab() const { return vocab_; }
  // initial[k]
  std::vector<double>& initial() { return initial_; }
  const std::vector<double>& initial() const { return initial_; }
  // transition[k * (K + 1) + j]; column K is the termination probability.
  std::vector<double>& transition() { return transition_; }
  const std::vector<double>& transition() const { return transition_; }
  // emission[k * |V| + t]; the end-marker column is always 0.
  std::vector<double>& emission() { return emission_; }
  const std::vector<double>& emission() const { return emission_; }

  double trans(std::size_t k, std::size_t j) const {
    return transition_[k * (states_ + 1) + j];
  }
  double term(std::size_t k) const {
    return transition_[k * (states_ + 1) + states_];
  }
  double emit(std::size_t k, TokenId t) const {
    return emission_[k * vocab_.size() + t];
  }

  // Throws NumericError when a row is not normalized.
  void check() const;

 private:
  friend Hmm load_hmm(std::string_view text);
  std::size_t states_ = 0;
  Vocabulary vocab_;
  std::vector<double> initial_;
  std::vector<double> transition_;
  std::vector<double> emission_;
};

struct HmmOptions {
  std::size_t states = 1;
  // Refuse state counts above this multiple of the corpus' distinct tokens.
  std::size_t max_states_per_token = 4;
};

Hmm train_hmm(const Corpus& corpus, const Vocabulary& vocab,
              const HmmOptions& hmm_options, const EmOptions& options,
              TrainReport* report = nullptr);
double hmm_loglik(const Hmm& h, const TokenSeq& w);
// Ancestral draw; stops at the sampled termination or after max_len tokens.
TokenSeq hmm_sample(const Hmm& h, std::size_t max_len, Rng& rng);

std::string save_hmm(const Hmm& h);
Hmm load_hmm(std::string_view text);

// ---------------------------------------------------------------------------
// Perplexity

using LoglikFn = std::function<double(const TokenSeq&)>;

struct PerplexityOptions {
  // Mixture weight of the uniform fallback; 0 disables it and zero
  // probability items raise NumericError.
  double smooth_eval = 0.0;
  // Support of the uniform fallback: lengths 1..max_length over
  // `real_tokens` symbols, each length equally likely.
  std::size_t max_length = 0;
  std::size_t real_tokens = 0;
};

// exp(-(1/T) * sum of log P(x)) with T the total token count.
double perplexity(const LoglikFn& loglik, const Corpus& test,
                  const PerplexityOptions& options = {});

}  // namespace pcfuzz
