#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <memory>
#include <stdexcept>
#include <tuple>

#include "pcfuzz/inference.hpp"

namespace oracle {

std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(PCFUZZ_FIXTURE_DIR) / relative;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<TokenSeq> all_strings(const std::vector<TokenId>& alphabet,
                                  std::size_t max_len) {
  std::vector<TokenSeq> out;
  std::vector<TokenSeq> layer{TokenSeq{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& prefix : layer) {
      for (TokenId t : alphabet) {
        TokenSeq w = prefix;
        w.push_back(t);
        next.push_back(w);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sentential-form enumeration

namespace {

using pcfuzz::Grammar;
using pcfuzz::Item;
using pcfuzz::Repeat;

// A form symbol is either a terminal or a pending item (with its repeat
// marker still attached).
struct Sym {
  bool terminal;
  TokenId token;
  const Item* item;
  bool operator<(const Sym& o) const {
    if (terminal != o.terminal) return terminal < o.terminal;
    if (terminal) return token < o.token;
    return item < o.item;
  }
};

class Deriver {
 public:
  Deriver(const Grammar& g, const pcfuzz::Vocabulary& vocab, std::size_t max_len)
      : g_(g), vocab_(vocab), max_len_(max_len) {
    compute_min_lengths();
  }

  std::set<TokenSeq> run() {
    const pcfuzz::Rule* entry = g_.find_rule(g_.entry);
    std::vector<std::vector<Sym>> stack;
    for (const auto& alt : entry->alternatives) stack.push_back(to_form(alt));
    std::set<std::vector<Sym>> seen;
    std::set<TokenSeq> out;
    while (!stack.empty()) {
      std::vector<Sym> form = std::move(stack.back());
      stack.pop_back();
      if (min_form(form) > max_len_ || !seen.insert(form).second) continue;
      auto it = std::find_if(form.begin(), form.end(),
                             [](const Sym& s) { return !s.terminal; });
      if (it == form.end()) {
        TokenSeq w;
        for (const auto& s : form) w.push_back(s.token);
        if (!w.empty()) out.insert(w);
        continue;
      }
      const std::size_t at = it - form.begin();
      for (auto& replacement : expand(*it->item)) {
        std::vector<Sym> next(form.begin(), form.begin() + at);
        next.insert(next.end(), replacement.begin(), replacement.end());
        next.insert(next.end(), form.begin() + at + 1, form.end());
        stack.push_back(std::move(next));
      }
    }
    return out;
  }

 private:
  std::vector<Sym> to_form(const pcfuzz::Alternative& alt) {
    std::vector<Sym> f;
    for (const auto& item : alt) f.push_back(Sym{false, 0, &item});
    return f;
  }

  // One derivation step for a pending item.
  std::vector<std::vector<Sym>> expand(const Item& item) {
    std::vector<std::vector<Sym>> out;
    switch (item.repeat) {
      case Repeat::kOptional:
        out.push_back({});
        for (auto& b : base(item)) out.push_back(b);
        return out;
      case Repeat::kStar:
        out.push_back({});
        [[fallthrough]];
      case Repeat::kPlus:
        // One copy followed by zero or more further copies.
        for (auto& b : base(item)) {
          b.push_back(Sym{false, 0, star_of(item)});
          out.push_back(b);
        }
        return out;
      case Repeat::kNone:
        return base(item);
    }
    return out;
  }

  std::vector<std::vector<Sym>> base(const Item& item) {
    switch (item.kind) {
      case Item::Kind::kToken:
        return {{Sym{true, vocab_.id(item.text), nullptr}}};
      case Item::Kind::kNonterminal: {
        std::vector<std::vector<Sym>> out;
        for (const auto& alt : g_.find_rule(item.text)->alternatives) {
          out.push_back(to_form(alt));
        }
        return out;
      }
      case Item::Kind::kGroup: {
        std::vector<std::vector<Sym>> out;
        for (const auto& alt : item.alternatives) out.push_back(to_form(alt));
        return out;
      }
      case Item::Kind::kLiteral:
        throw std::logic_error("literal in grammar");
    }
    return {};
  }

  // Stable copy of `item` carrying a star marker.
  const Item* star_of(const Item& item) {
    auto it = stars_.find(&item);
    if (it != stars_.end()) return it->second.get();
    auto copy = std::make_unique<Item>(item);
    copy->repeat = Repeat::kStar;
    const Item* raw = copy.get();
    stars_.emplace(&item, std::move(copy));
    return raw;
  }

  std::size_t min_item(const Item& item) {
    if (item.repeat == Repeat::kStar || item.repeat == Repeat::kOptional) return 0;
    switch (item.kind) {
      case Item::Kind::kToken: return 1;
      case Item::Kind::kNonterminal: return rule_min_.at(item.text);
      case Item::Kind::kGroup: {
        std::size_t best = kInf;
        for (const auto& alt : item.alternatives) best = std::min(best, min_alt(alt));
        return best;
      }
      case Item::Kind::kLiteral: return 1;
    }
    return kInf;
  }

  std::size_t min_alt(const pcfuzz::Alternative& alt) {
    std::size_t s = 0;
    for (const auto& item : alt) s = std::min(kInf, s + min_item(item));
    return s;
  }

  std::size_t min_form(const std::vector<Sym>& form) {
    std::size_t s = 0;
    for (const auto& sym : form) s += sym.terminal ? 1 : std::min(min_item(*sym.item), max_len_ + 1);
    return s;
  }

  void compute_min_lengths() {
    for (const auto& r : g_.rules) rule_min_[r.name] = kInf;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& r : g_.rules) {
        std::size_t best = kInf;
        for (const auto& alt : r.alternatives) best = std::min(best, min_alt(alt));
        if (best < rule_min_[r.name]) {
          rule_min_[r.name] = best;
          changed = true;
        }
      }
    }
  }

  static constexpr std::size_t kInf = 1'000'000;
  const Grammar& g_;
  const pcfuzz::Vocabulary& vocab_;
  std::size_t max_len_;
  std::map<std::string, std::size_t> rule_min_;
  std::map<const Item*, std::unique_ptr<Item>> stars_;
};

}  // namespace

std::set<TokenSeq> derive_language(const pcfuzz::Grammar& g,
                                   const pcfuzz::Vocabulary& vocab,
                                   std::size_t max_len) {
  return Deriver(g, vocab, max_len).run();
}

// ---------------------------------------------------------------------------
// Inside algorithm

double inside(const pcfuzz::Pcfg& p, const TokenSeq& w) {
  const auto& g = p.grammar();
  const std::size_t n = w.size();
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> memo;
  std::function<double(std::size_t, std::size_t, std::size_t)> in =
      [&](std::size_t a, std::size_t i, std::size_t j) -> double {
    auto key = std::make_tuple(a, i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double total = 0.0;
    for (std::size_t r : g.rules_of(static_cast<pcfuzz::SymbolId>(a))) {
      if (g.is_binary(r)) {
        const auto& br = g.binary_rules()[r];
        for (std::size_t k = i + 1; k < j; ++k) {
          total += p.prob(r) * in(br.left, i, k) * in(br.right, k, j);
        }
      } else if (j == i + 1) {
        const auto& tr = g.terminal_rules()[r - g.binary_rules().size()];
        if (tr.token == w[i]) total += p.prob(r);
      }
    }
    memo[key] = total;
    return total;
  };
  return n == 0 ? 0.0 : in(g.entry(), 0, n);
}

// ---------------------------------------------------------------------------
// Tables

Table evi_table(const pcfuzz::Circuit& c, const std::set<TokenSeq>& language) {
  Table t;
  for (const auto& w : language) {
    t[w] = pcfuzz::evi(c, w);
  }
  return t;
}

double mass(const Table& t, const std::function<bool(const TokenSeq&)>& pred) {
  double s = 0.0;
  for (const auto& [w, p] : t) {
    if (pred(w)) s += p;
  }
  return s;
}

bool contains(const TokenSeq& w, TokenId t) {
  return std::find(w.begin(), w.end(), t) != w.end();
}

bool span_at(const TokenSeq& w, const TokenSeq& seq, std::size_t p) {
  if (p + seq.size() > w.size()) return false;
  return std::equal(seq.begin(), seq.end(), w.begin() + p);
}

std::size_t first_index(const TokenSeq& w, TokenId t) {
  return std::find(w.begin(), w.end(), t) - w.begin();
}

std::optional<std::size_t> argmax_lowest(const std::vector<double>& scores,
                                         double rel_tol) {
  double best = 0.0;
  for (double s : scores) best = std::max(best, s);
  if (best <= 0.0) return std::nullopt;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= best * (1.0 - rel_tol)) return i;
  }
  return std::nullopt;
}

double total_variation(const Table& p, const Table& q) {
  double d = 0.0;
  for (const auto& [w, pw] : p) {
    auto it = q.find(w);
    d += std::abs(pw - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [w, qw] : q) {
    if (!p.count(w)) d += qw;
  }
  return d / 2.0;
}

Table empirical(const std::vector<TokenSeq>& draws) {
  Table t;
  for (const auto& w : draws) t[w] += 1.0;
  for (auto& [w, v] : t) v /= static_cast<double>(draws.size());
  return t;
}

}  // namespace oracle
