#include <optional>
#include <set>

#include "pcfuzz/error.hpp"
#include "pcfuzz/grammar.hpp"

namespace pcfuzz {

namespace {

constexpr std::size_t kMaxExpandedAlternatives = 10000;

using Sequence = std::vector<Item>;

class BnfLowering {
 public:
  explicit BnfLowering(const Grammar& g) : in_(g) {
    for (const auto& r : g.rules) names_.insert(r.name);
  }

  Grammar run() {
    Grammar out;
    out.entry = in_.entry;
    out.tokens = in_.tokens;
    for (const auto& r : in_.rules) {
      current_ = r.name;
      Rule lowered{r.name, {}, r.loc};
      if (auto acc = accumulate_into_self(r)) {
        lowered.alternatives = std::move(*acc);
      } else {
        for (const auto& alt : r.alternatives) {
          for (auto& seq : expand(alt)) {
            lowered.alternatives.push_back(std::move(seq));
          }
        }
      }
      dedupe(lowered.alternatives);
      rules_.insert(rules_.begin() + static_cast<long>(emitted_main_++),
                    std::move(lowered));
    }
    out.rules = std::move(rules_);
    return out;
  }

 private:
  // `a : prefix (block)*` with a single alternative accumulates repetitions
  // into `a` itself: a -> prefix | a block.
  std::optional<std::vector<Sequence>> accumulate_into_self(const Rule& r) {
    if (r.alternatives.size() != 1) return std::nullopt;
    const auto& alt = r.alternatives[0];
    if (alt.size() < 2) return std::nullopt;
    const Item& last = alt.back();
    if (last.repeat != Repeat::kStar && last.repeat != Repeat::kPlus) {
      return std::nullopt;
    }
    Sequence prefix(alt.begin(), alt.end() - 1);
    auto prefixes = expand(prefix);
    for (const auto& p : prefixes) {
      // An empty prefix would turn `a -> a block` into a unit cycle.
      if (p.empty()) return std::nullopt;
    }
    Item element = repeated_element(last);
    std::vector<Sequence> out;
    for (const auto& p : prefixes) {
      Sequence first = p;
      if (last.repeat == Repeat::kPlus) first.push_back(element);
      out.push_back(std::move(first));
    }
    out.push_back(Sequence{Item::nonterminal(r.name), element});
    return out;
  }

  std::vector<Sequence> expand(const Sequence& items) {
    std::vector<Sequence> acc{Sequence{}};
    for (const auto& item : items) {
      auto options = expand_item(item);
      std::vector<Sequence> next;
      for (const auto& head : acc) {
        for (const auto& tail : options) {
          Sequence s = head;
          s.insert(s.end(), tail.begin(), tail.end());
          next.push_back(std::move(s));
        }
      }
      if (next.size() > kMaxExpandedAlternatives) {
        throw CapacityError("EBNF expansion of rule '" + current_ +
                            "' exceeds " +
                            std::to_string(kMaxExpandedAlternatives) +
                            " alternatives");
      }
      acc = std::move(next);
    }
    return acc;
  }

  std::vector<Sequence> base_options(const Item& item) {
    switch (item.kind) {
      case Item::Kind::kNonterminal:
        return {Sequence{Item::nonterminal(item.text)}};
      case Item::Kind::kToken:
        return {Sequence{Item::token(item.text)}};
      case Item::Kind::kLiteral:
        throw UsageError("to_bnf requires a literal-free grammar; run "
                         "replace_literals first");
      case Item::Kind::kGroup: {
        std::vector<Sequence> out;
        for (const auto& alt : item.alternatives) {
          for (auto& s : expand(alt)) out.push_back(std::move(s));
        }
        return out;
      }
    }
    return {};
  }

  std::vector<Sequence> expand_item(const Item& item) {
    switch (item.repeat) {
      case Repeat::kNone:
        return base_options(item);
      case Repeat::kOptional: {
        auto out = base_options(item);
        out.push_back(Sequence{});
        return out;
      }
      case Repeat::kStar:
        return {Sequence{}, Sequence{repetition(item)}};
      case Repeat::kPlus:
        return {Sequence{repetition(item)}};
    }
    return {};
  }

  // The symbol being repeated: a plain symbol, or a fresh block nonterminal.
  Item repeated_element(const Item& item) {
    Item plain = item;
    plain.repeat = Repeat::kNone;
    auto options = base_options(plain);
    if (options.size() == 1 && options[0].size() == 1) return options[0][0];
    std::string name = fresh("blk");
    add_rule(name, std::move(options));
    return Item::nonterminal(name);
  }

  // One-or-more repetitions, left-recursive: rep -> x | rep x.
  Item repetition(const Item& item) {
    Item element = repeated_element(item);
    std::string name = fresh("rep");
    add_rule(name, {Sequence{element},
                    Sequence{Item::nonterminal(name), element}});
    return Item::nonterminal(name);
  }

  std::string fresh(const char* kind) {
    for (int k = 1;; ++k) {
      std::string name = current_ + "_" + kind + std::to_string(k);
      if (!names_.count(name)) {
        names_.insert(name);
        return name;
      }
    }
  }

  void add_rule(const std::string& name, std::vector<Sequence> alts) {
    dedupe(alts);
    rules_.push_back(Rule{name, std::move(alts), {}});
  }

  static std::string key(const Sequence& s) {
    std::string k;
    for (const auto& item : s) {
      k += item.kind == Item::Kind::kToken ? 'T' : 'N';
      k += item.text;
      k += ' ';
    }
    return k;
  }

  static void dedupe(std::vector<Sequence>& alts) {
    std::set<std::string> seen;
    std::vector<Sequence> out;
    for (auto& s : alts) {
      if (seen.insert(key(s)).second) out.push_back(std::move(s));
    }
    alts = std::move(out);
  }

  const Grammar& in_;
  std::set<std::string> names_;
  std::string current_;
  std::vector<Rule> rules_;
  std::size_t emitted_main_ = 0;
};

}  // namespace

Grammar to_bnf(const Grammar& g) {
  if (g.has_literals()) {
    throw UsageError("to_bnf requires a literal-free grammar; run "
                     "replace_literals first");
  }
  return BnfLowering(g).run();
}

}  // namespace pcfuzz
