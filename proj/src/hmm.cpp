#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "pcfuzz/error.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void normalize(std::span<double> row) {
  double total = 0.0;
  for (double x : row) total += x;
  for (double& x : row) x /= total;
}

void check_row(std::span<const double> row, const std::string& what) {
  double total = 0.0;
  for (double x : row) {
    if (!std::isfinite(x) || x < 0.0) {
      throw NumericError(what + " has a negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw NumericError(what + " sums to " + text::format_double(total));
  }
}

void check_tokens(const Hmm& h, const TokenSeq& w) {
  if (w.empty()) throw InputError("log-likelihood of an empty sequence");
  for (TokenId t : w) {
    if (t == Vocabulary::kEndMarker || t >= h.vocab().size()) {
      throw InputError("token id " + std::to_string(t) + " outside vocabulary");
    }
  }
}

// Scaled forward pass. alpha_hat[t * K + k] are per-step normalized forward
// values, scale[t] the normalizers; returns log P(w).
double forward(const Hmm& h, const TokenSeq& w, std::vector<double>& alpha_hat,
               std::vector<double>& scale, double& z_end) {
  const std::size_t K = h.states();
  const std::size_t L = w.size();
  alpha_hat.assign(L * K, 0.0);
  scale.assign(L, 0.0);
  double ll = 0.0;
  for (std::size_t t = 0; t < L; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      double a;
      if (t == 0) {
        a = h.initial()[j];
      } else {
        a = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          a += alpha_hat[(t - 1) * K + k] * h.trans(k, j);
        }
      }
      a *= h.emit(j, w[t]);
      alpha_hat[t * K + j] = a;
      s += a;
    }
    if (!(s > 0.0)) return kNegInf;
    for (std::size_t j = 0; j < K; ++j) alpha_hat[t * K + j] /= s;
    scale[t] = s;
    ll += std::log(s);
  }
  z_end = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    z_end += alpha_hat[(L - 1) * K + k] * h.term(k);
  }
  if (!(z_end > 0.0)) return kNegInf;
  return ll + std::log(z_end);
}

}  // namespace

Hmm::Hmm(std::size_t states, Vocabulary vocab, std::uint64_t seed)
    : states_(states), vocab_(std::move(vocab)) {
  if (states == 0) throw UsageError("an HMM needs at least one state");
  Rng rng(seed);
  const std::size_t V = vocab_.size();
  initial_.resize(states_);
  transition_.resize(states_ * (states_ + 1));
  emission_.assign(states_ * V, 0.0);
  for (double& x : initial_) x = 0.5 + rng.uniform();
  normalize(initial_);
  for (std::size_t k = 0; k < states_; ++k) {
    std::span<double> row(transition_.data() + k * (states_ + 1), states_ + 1);
    for (double& x : row) x = 0.5 + rng.uniform();
    normalize(row);
    std::span<double> em(emission_.data() + k * V, V);
    for (std::size_t t = 1; t < V; ++t) em[t] = 0.5 + rng.uniform();
    if (V > 1) normalize(em);
  }
}

void Hmm::check() const {
  check_row(initial_, "initial distribution");
  const std::size_t V = vocab_.size();
  for (std::size_t k = 0; k < states_; ++k) {
    check_row({transition_.data() + k * (states_ + 1), states_ + 1},
              "transition row " + std::to_string(k));
    check_row({emission_.data() + k * V, V}, "emission row " + std::to_string(k));
    if (emission_[k * V] != 0.0) {
      throw NumericError("emission row " + std::to_string(k) +
                         " gives mass to the end marker");
    }
  }
}

double hmm_loglik(const Hmm& h, const TokenSeq& w) {
  check_tokens(h, w);
  std::vector<double> alpha, scale;
  double z_end = 0.0;
  return forward(h, w, alpha, scale, z_end);
}

Hmm train_hmm(const Corpus& corpus, const Vocabulary& vocab,
              const HmmOptions& hmm_options, const EmOptions& options,
              TrainReport* report_out) {
  if (options.epochs == 0) throw UsageError("training needs at least one epoch");
  if (options.smoothing < 0.0) throw UsageError("smoothing must be >= 0");
  std::set<TokenId> distinct;
  for (const auto& item : corpus.items) distinct.insert(item.begin(), item.end());
  const std::size_t K = hmm_options.states;
  if (K == 0) throw UsageError("an HMM needs at least one state");
  if (K > distinct.size() * hmm_options.max_states_per_token) {
    throw UsageError("HMM with " + std::to_string(K) + " states is degenerate "
                     "for a corpus with " + std::to_string(distinct.size()) +
                     " distinct tokens (limit " +
                     std::to_string(distinct.size() *
                                    hmm_options.max_states_per_token) + ")");
  }
  Hmm h(K, vocab, options.seed);
  for (const auto& item : corpus.items) check_tokens(h, item);

  std::map<TokenSeq, double> unique;
  for (const auto& item : corpus.items) unique[item] += 1.0;

  const std::size_t V = vocab.size();
  TrainReport report;
  report.epochs = options.epochs;
  report.smoothing = options.smoothing;
  report.tokens = corpus.total_tokens();

  std::vector<double> c_init(K), c_trans(K * (K + 1)), c_emit(K * V);
  std::vector<double> alpha, scale, beta, next;

  auto e_step = [&]() {
    std::fill(c_init.begin(), c_init.end(), 0.0);
    std::fill(c_trans.begin(), c_trans.end(), 0.0);
    std::fill(c_emit.begin(), c_emit.end(), 0.0);
    double ll = 0.0;
    for (const auto& [w, mult] : unique) {
      const std::size_t L = w.size();
      double z_end = 0.0;
      const double lw = forward(h, w, alpha, scale, z_end);
      if (lw == kNegInf) {
        throw NumericError("HMM assigns probability 0 to '" + vocab.render(w) +
                           "'");
      }
      ll += mult * lw;
      // Scaled backward values: beta_hat[L-1][k] = term(k).
      beta.assign(L * K, 0.0);
      for (std::size_t k = 0; k < K; ++k) beta[(L - 1) * K + k] = h.term(k);
      for (std::size_t t = L - 1; t-- > 0;) {
        for (std::size_t k = 0; k < K; ++k) {
          double s = 0.0;
          for (std::size_t j = 0; j < K; ++j) {
            s += h.trans(k, j) * h.emit(j, w[t + 1]) * beta[(t + 1) * K + j];
          }
          beta[t * K + k] = s / scale[t + 1];
        }
      }
      for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
          const double gamma = alpha[t * K + k] * beta[t * K + k] / z_end;
          if (t == 0) c_init[k] += mult * gamma;
          c_emit[k * V + w[t]] += mult * gamma;
        }
      }
      for (std::size_t t = 0; t + 1 < L; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
          const double a = alpha[t * K + k];
          if (a == 0.0) continue;
          for (std::size_t j = 0; j < K; ++j) {
            c_trans[k * (K + 1) + j] +=
                mult * a * h.trans(k, j) * h.emit(j, w[t + 1]) *
                beta[(t + 1) * K + j] / (scale[t + 1] * z_end);
          }
        }
      }
      for (std::size_t k = 0; k < K; ++k) {
        c_trans[k * (K + 1) + K] +=
            mult * alpha[(L - 1) * K + k] * h.term(k) / z_end;
      }
    }
    return ll;
  };

  auto update = [&](std::span<double> target, std::span<const double> counts,
                    std::size_t skip_first) {
    double total = 0.0;
    for (std::size_t i = skip_first; i < counts.size(); ++i) total += counts[i];
    const double denom =
        total + options.smoothing * static_cast<double>(counts.size() - skip_first);
    if (!(denom > 0.0)) return;
    for (std::size_t i = skip_first; i < counts.size(); ++i) {
      target[i] = (counts[i] + options.smoothing) / denom;
    }
  };

  auto m_step = [&]() {
    update(h.initial(), c_init, 0);
    for (std::size_t k = 0; k < K; ++k) {
      update({h.transition().data() + k * (K + 1), K + 1},
             {c_trans.data() + k * (K + 1), K + 1}, 0);
      update({h.emission().data() + k * V, V}, {c_emit.data() + k * V, V}, 1);
    }
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    report.loglik.push_back(e_step());
    m_step();
  }
  report.loglik.push_back(e_step());
  if (report_out) *report_out = std::move(report);
  return h;
}

TokenSeq hmm_sample(const Hmm& h, std::size_t max_len, Rng& rng) {
  const std::size_t K = h.states();
  const std::size_t V = h.vocab().size();
  TokenSeq out;
  std::size_t state = rng.categorical(h.initial());
  while (out.size() < max_len) {
    out.push_back(static_cast<TokenId>(
        rng.categorical({h.emission().data() + state * V, V})));
    const std::size_t next =
        rng.categorical({h.transition().data() + state * (K + 1), K + 1});
    if (next == K) break;
    state = next;
  }
  return out;
}

std::string save_hmm(const Hmm& h) {
  const std::size_t K = h.states();
  const std::size_t V = h.vocab().size();
  std::string out = "pcfuzz-hmm 1\ntokens";
  for (const auto& name : h.vocab().names()) out += " " + name;
  out += "\nstates " + std::to_string(K) + "\ninitial";
  for (double x : h.initial()) out += " " + text::format_double(x);
  out += "\ntransition\n";
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j <= K; ++j) {
      out += (j ? " " : "") + text::format_double(h.transition()[k * (K + 1) + j]);
    }
    out += "\n";
  }
  out += "emission\n";
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < V; ++t) {
      out += (t ? " " : "") + text::format_double(h.emission()[k * V + t]);
    }
    out += "\n";
  }
  out += "end\n";
  return out;
}

Hmm load_hmm(std::string_view text_in) {
  auto lines = text::split(text_in, '\n');
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) {
    throw InputError("HMM file line " + std::to_string(pos) + ": " + msg);
  };
  auto next = [&]() {
    while (pos < lines.size()) {
      auto f = text::split_whitespace(lines[pos++]);
      if (!f.empty()) return f;
    }
    fail("file ends early");
    return std::vector<std::string>{};
  };
  auto numbers = [&](const std::vector<std::string>& f, std::size_t from,
                     std::size_t count) {
    if (f.size() != from + count) fail("expected " + std::to_string(count) + " numbers");
    std::vector<double> out;
    try {
      for (std::size_t i = from; i < f.size(); ++i) {
        out.push_back(text::parse_double(f[i]));
      }
    } catch (const InputError& e) {
      fail(e.what());
    }
    return out;
  };
  auto f = next();
  if (f.size() != 2 || f[0] != "pcfuzz-hmm") fail("not an HMM file");
  if (f[1] != "1") fail("unsupported HMM format version " + f[1]);
  f = next();
  if (f.size() < 2 || f[0] != "tokens" || f[1] != Vocabulary::kEndMarkerName) {
    fail("expected token list starting with the end marker");
  }
  Hmm h;
  h.vocab_ = Vocabulary(std::vector<std::string>(f.begin() + 2, f.end()));
  f = next();
  if (f.size() != 2 || f[0] != "states") fail("expected states <K>");
  try {
    h.states_ = text::parse_size(f[1]);
  } catch (const InputError& e) {
    fail(e.what());
  }
  const std::size_t K = h.states_;
  const std::size_t V = h.vocab_.size();
  if (K == 0) fail("an HMM needs at least one state");
  f = next();
  if (f[0] != "initial") fail("expected initial");
  h.initial_ = numbers(f, 1, K);
  f = next();
  if (f[0] != "transition") fail("expected transition");
  for (std::size_t k = 0; k < K; ++k) {
    auto row = numbers(next(), 0, K + 1);
    h.transition_.insert(h.transition_.end(), row.begin(), row.end());
  }
  f = next();
  if (f[0] != "emission") fail("expected emission");
  for (std::size_t k = 0; k < K; ++k) {
    auto row = numbers(next(), 0, V);
    h.emission_.insert(h.emission_.end(), row.begin(), row.end());
  }
  f = next();
  if (f[0] != "end") fail("expected end");
  h.check();
  return h;
}

}  // namespace pcfuzz
