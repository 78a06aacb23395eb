#include <map>

#include "pcfuzz/cnf.hpp"
#include "pcfuzz/error.hpp"
#include "pcfuzz/grammar.hpp"

namespace pcfuzz {

namespace {

using Lang = std::set<TokenSeq>;

class EbnfEnumerator {
 public:
  EbnfEnumerator(const Grammar& g, const Vocabulary& vocab, std::size_t max_len,
                 std::size_t limit)
      : g_(g), vocab_(vocab), max_len_(max_len), limit_(limit) {}

  Lang run() {
    for (const auto& r : g_.rules) lang_[r.name];
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& r : g_.rules) {
        Lang next;
        for (const auto& alt : r.alternatives) {
          Lang s = sequence(alt);
          next.insert(s.begin(), s.end());
        }
        check(next);
        if (next.size() != lang_[r.name].size()) {
          lang_[r.name] = std::move(next);
          changed = true;
        }
      }
    }
    Lang out = lang_[g_.entry];
    out.erase(TokenSeq{});
    return out;
  }

 private:
  void check(const Lang& l) const {
    if (l.size() > limit_) {
      throw CapacityError("language enumeration exceeds " +
                          std::to_string(limit_) + " strings");
    }
  }

  Lang concat(const Lang& a, const Lang& b) const {
    Lang out;
    for (const auto& x : a) {
      for (const auto& y : b) {
        if (x.size() + y.size() > max_len_) continue;
        TokenSeq s = x;
        s.insert(s.end(), y.begin(), y.end());
        out.insert(std::move(s));
      }
    }
    check(out);
    return out;
  }

  Lang sequence(const Alternative& alt) {
    Lang acc{TokenSeq{}};
    for (const auto& item : alt) {
      acc = concat(acc, repeated(item));
      if (acc.empty()) break;
    }
    return acc;
  }

  Lang base(const Item& item) {
    switch (item.kind) {
      case Item::Kind::kNonterminal:
        return lang_[item.text];
      case Item::Kind::kToken:
        return {TokenSeq{vocab_.id(item.text)}};
      case Item::Kind::kLiteral:
        throw UsageError("language enumeration needs a literal-free grammar");
      case Item::Kind::kGroup: {
        Lang out;
        for (const auto& alt : item.alternatives) {
          Lang s = sequence(alt);
          out.insert(s.begin(), s.end());
        }
        return out;
      }
    }
    return {};
  }

  Lang closure(const Lang& x) const {
    Lang r{TokenSeq{}};
    while (true) {
      Lang next = concat(r, x);
      next.insert(r.begin(), r.end());
      if (next.size() == r.size()) return r;
      r = std::move(next);
    }
  }

  Lang repeated(const Item& item) {
    Lang b = base(item);
    switch (item.repeat) {
      case Repeat::kNone:
        return b;
      case Repeat::kOptional:
        b.insert(TokenSeq{});
        return b;
      case Repeat::kStar:
        return closure(b);
      case Repeat::kPlus:
        return concat(b, closure(b));
    }
    return b;
  }

  const Grammar& g_;
  const Vocabulary& vocab_;
  std::size_t max_len_;
  std::size_t limit_;
  std::map<std::string, Lang> lang_;
};

}  // namespace

std::set<TokenSeq> enumerate_language(const Grammar& g, const Vocabulary& vocab,
                                      std::size_t max_len, std::size_t limit) {
  return EbnfEnumerator(g, vocab, max_len, limit).run();
}

std::set<TokenSeq> enumerate_cnf_language(const CnfGrammar& g,
                                          std::size_t max_len,
                                          std::size_t limit) {
  const std::size_t num = g.num_nonterminals();
  std::vector<std::vector<Lang>> lang(num, std::vector<Lang>(max_len + 1));
  for (const auto& tr : g.terminal_rules()) {
    if (max_len >= 1) lang[tr.lhs][1].insert(TokenSeq{tr.token});
  }
  for (std::size_t len = 2; len <= max_len; ++len) {
    for (const auto& br : g.binary_rules()) {
      Lang& out = lang[br.lhs][len];
      for (std::size_t left = 1; left < len; ++left) {
        for (const auto& x : lang[br.left][left]) {
          for (const auto& y : lang[br.right][len - left]) {
            TokenSeq s = x;
            s.insert(s.end(), y.begin(), y.end());
            out.insert(std::move(s));
          }
        }
      }
      if (out.size() > limit) {
        throw CapacityError("language enumeration exceeds " +
                            std::to_string(limit) + " strings");
      }
    }
  }
  Lang result;
  for (std::size_t len = 1; len <= max_len; ++len) {
    result.insert(lang[g.entry()][len].begin(), lang[g.entry()][len].end());
  }
  return result;
}

}  // namespace pcfuzz
