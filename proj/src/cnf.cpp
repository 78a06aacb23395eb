#include "pcfuzz/cnf.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

CnfGrammar::CnfGrammar(Vocabulary vocab, std::vector<std::string> nonterminals,
                       SymbolId entry, std::vector<BinaryRule> binary,
                       std::vector<TerminalRule> terminal)
    : vocab_(std::move(vocab)),
      nonterminals_(std::move(nonterminals)),
      entry_(entry),
      binary_(std::move(binary)),
      terminal_(std::move(terminal)),
      rules_of_(nonterminals_.size()) {
  const auto n = nonterminals_.size();
  if (entry_ >= n) throw InputError("CNF entry symbol out of range");
  for (std::size_t r = 0; r < binary_.size(); ++r) {
    const auto& b = binary_[r];
    if (b.lhs >= n || b.left >= n || b.right >= n) {
      throw InputError("CNF binary rule references unknown nonterminal");
    }
    rules_of_[b.lhs].push_back(r);
  }
  for (std::size_t r = 0; r < terminal_.size(); ++r) {
    const auto& t = terminal_[r];
    if (t.lhs >= n) {
      throw InputError("CNF terminal rule references unknown nonterminal");
    }
    if (t.token == Vocabulary::kEndMarker || t.token >= vocab_.size()) {
      throw InputError("CNF terminal rule references invalid token");
    }
    rules_of_[t.lhs].push_back(binary_.size() + r);
  }
}

SymbolId CnfGrammar::rule_lhs(std::size_t rule_id) const {
  return is_binary(rule_id) ? binary_[rule_id].lhs
                            : terminal_[rule_id - binary_.size()].lhs;
}

std::optional<SymbolId> CnfGrammar::find_nonterminal(
    std::string_view name) const {
  for (SymbolId a = 0; a < nonterminals_.size(); ++a) {
    if (nonterminals_[a] == name) return a;
  }
  return std::nullopt;
}

std::string CnfGrammar::rule_to_string(std::size_t rule_id) const {
  if (is_binary(rule_id)) {
    const auto& b = binary_[rule_id];
    return nonterminals_[b.lhs] + " -> " + nonterminals_[b.left] + " " +
           nonterminals_[b.right];
  }
  const auto& t = terminal_[rule_id - binary_.size()];
  return nonterminals_[t.lhs] + " -> '" + vocab_.name(t.token) + "'";
}

std::vector<std::vector<bool>> CnfGrammar::derivable_lengths(
    std::size_t max_len) const {
  std::vector<std::vector<bool>> d(num_nonterminals(),
                                   std::vector<bool>(max_len + 1, false));
  if (max_len == 0) return d;
  for (const auto& t : terminal_) d[t.lhs][1] = true;
  for (std::size_t len = 2; len <= max_len; ++len) {
    for (const auto& b : binary_) {
      if (d[b.lhs][len]) continue;
      for (std::size_t k = 1; k < len; ++k) {
        if (d[b.left][k] && d[b.right][len - k]) {
          d[b.lhs][len] = true;
          break;
        }
      }
    }
  }
  return d;
}

bool CnfGrammar::operator==(const CnfGrammar& other) const {
  return vocab_ == other.vocab_ && nonterminals_ == other.nonterminals_ &&
         entry_ == other.entry_ && binary_ == other.binary_ &&
         terminal_ == other.terminal_;
}

// ---------------------------------------------------------------------------
// Conversion

namespace {

struct Sym {
  bool token = false;
  std::string name;
  auto operator<=>(const Sym&) const = default;
};

using Production = std::vector<Sym>;

// Insertion-ordered production lists keyed by nonterminal name.
class RuleTable {
 public:
  void add_nonterminal(const std::string& a) {
    if (prods_.emplace(a, std::vector<Production>{}).second) order_.push_back(a);
  }
  bool add(const std::string& a, Production p) {
    add_nonterminal(a);
    if (!seen_[a].insert(p).second) return false;
    prods_[a].push_back(std::move(p));
    return true;
  }
  const std::vector<std::string>& order() const { return order_; }
  const std::vector<Production>& productions(const std::string& a) const {
    return prods_.at(a);
  }
  bool has(const std::string& a) const { return prods_.count(a) != 0; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<Production>> prods_;
  std::map<std::string, std::set<Production>> seen_;
};

constexpr std::size_t kMaxNullableOccurrences = 16;

RuleTable from_bnf(const Grammar& bnf) {
  RuleTable t;
  for (const auto& r : bnf.rules) t.add_nonterminal(r.name);
  for (const auto& r : bnf.rules) {
    for (const auto& alt : r.alternatives) {
      Production p;
      for (const auto& item : alt) {
        if (item.kind == Item::Kind::kGroup || item.repeat != Repeat::kNone ||
            item.kind == Item::Kind::kLiteral) {
          throw UsageError("to_cnf requires a BNF grammar; run to_bnf first");
        }
        p.push_back(Sym{item.kind == Item::Kind::kToken, item.text});
      }
      t.add(r.name, std::move(p));
    }
  }
  return t;
}

RuleTable remove_epsilon(const RuleTable& in) {
  std::set<std::string> nullable;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& a : in.order()) {
      if (nullable.count(a)) continue;
      for (const auto& p : in.productions(a)) {
        bool all = std::all_of(p.begin(), p.end(), [&](const Sym& s) {
          return !s.token && nullable.count(s.name);
        });
        if (all) {
          nullable.insert(a);
          changed = true;
          break;
        }
      }
    }
  }
  RuleTable out;
  for (const auto& a : in.order()) {
    out.add_nonterminal(a);
    for (const auto& p : in.productions(a)) {
      std::vector<std::size_t> optional_at;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].token && nullable.count(p[i].name)) optional_at.push_back(i);
      }
      if (optional_at.size() > kMaxNullableOccurrences) {
        throw CapacityError("too many nullable symbols in one production of '" +
                            a + "'");
      }
      const std::size_t combos = std::size_t{1} << optional_at.size();
      for (std::size_t mask = 0; mask < combos; ++mask) {
        Production q;
        std::size_t next_opt = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (next_opt < optional_at.size() && optional_at[next_opt] == i) {
            bool drop = (mask >> next_opt) & 1;
            ++next_opt;
            if (drop) continue;
          }
          q.push_back(p[i]);
        }
        if (!q.empty()) out.add(a, std::move(q));
      }
    }
  }
  return out;
}

bool is_unit(const Production& p) { return p.size() == 1 && !p[0].token; }

RuleTable remove_units(const RuleTable& in) {
  RuleTable out;
  for (const auto& a : in.order()) {
    out.add_nonterminal(a);
    // BFS over unit edges, keeping discovery order deterministic.
    std::vector<std::string> closure{a};
    std::set<std::string> seen{a};
    for (std::size_t i = 0; i < closure.size(); ++i) {
      for (const auto& p : in.productions(closure[i])) {
        if (is_unit(p) && seen.insert(p[0].name).second) {
          closure.push_back(p[0].name);
        }
      }
    }
    for (const auto& b : closure) {
      for (const auto& p : in.productions(b)) {
        if (!is_unit(p)) out.add(a, p);
      }
    }
  }
  return out;
}

RuleTable remove_useless(const RuleTable& in, const std::string& entry) {
  std::set<std::string> productive;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& a : in.order()) {
      if (productive.count(a)) continue;
      for (const auto& p : in.productions(a)) {
        bool ok = std::all_of(p.begin(), p.end(), [&](const Sym& s) {
          return s.token || productive.count(s.name);
        });
        if (ok) {
          productive.insert(a);
          changed = true;
          break;
        }
      }
    }
  }
  if (!productive.count(entry)) {
    throw InputError("entry nonterminal '" + entry +
                     "' derives no non-empty string");
  }
  auto usable = [&](const Production& p) {
    return std::all_of(p.begin(), p.end(), [&](const Sym& s) {
      return s.token || productive.count(s.name);
    });
  };
  std::vector<std::string> reachable{entry};
  std::set<std::string> seen{entry};
  for (std::size_t i = 0; i < reachable.size(); ++i) {
    for (const auto& p : in.productions(reachable[i])) {
      if (!usable(p)) continue;
      for (const auto& s : p) {
        if (!s.token && seen.insert(s.name).second) reachable.push_back(s.name);
      }
    }
  }
  RuleTable out;
  for (const auto& a : reachable) {
    out.add_nonterminal(a);
    for (const auto& p : in.productions(a)) {
      if (usable(p)) out.add(a, p);
    }
  }
  return out;
}

}  // namespace

CnfGrammar to_cnf(const Grammar& bnf, const Vocabulary& vocab) {
  if (!bnf.find_rule(bnf.entry)) {
    throw InputError("entry rule '" + bnf.entry + "' is not defined");
  }
  RuleTable t = from_bnf(bnf);
  t = remove_epsilon(t);
  t = remove_units(t);
  t = remove_useless(t, bnf.entry);

  // Names in use, so fresh nonterminals never collide.
  std::set<std::string> used(t.order().begin(), t.order().end());

  std::vector<std::string> names;
  std::map<std::string, SymbolId> ids;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = ids.emplace(name, static_cast<SymbolId>(names.size()));
    if (inserted) names.push_back(name);
    return it->second;
  };
  for (const auto& a : t.order()) intern(a);

  std::vector<BinaryRule> binary;
  std::vector<TerminalRule> terminal;
  std::set<std::tuple<SymbolId, SymbolId, SymbolId>> seen_binary;
  std::set<std::pair<SymbolId, TokenId>> seen_terminal;
  auto add_binary = [&](SymbolId a, SymbolId b, SymbolId c) {
    if (seen_binary.emplace(a, b, c).second) binary.push_back({a, b, c});
  };
  auto add_terminal = [&](SymbolId a, TokenId tok) {
    if (seen_terminal.emplace(a, tok).second) terminal.push_back({a, tok});
  };

  std::map<std::string, SymbolId> wrappers;
  auto wrapper_for = [&](const std::string& token) {
    if (auto it = wrappers.find(token); it != wrappers.end()) return it->second;
    std::string name = token;
    for (int k = 2; used.count(name); ++k) name = token + "_" + std::to_string(k);
    used.insert(name);
    SymbolId w = intern(name);
    wrappers.emplace(token, w);
    add_terminal(w, vocab.id(token));
    return w;
  };
  // Suffix chains are shared per left-hand side.
  std::map<std::pair<SymbolId, std::vector<SymbolId>>, SymbolId> suffixes;
  std::map<SymbolId, int> suffix_counter;
  auto fresh_suffix = [&](SymbolId lhs) {
    std::string base = names[lhs];
    std::string name;
    do {
      name = base + "_" + std::to_string(++suffix_counter[lhs]);
    } while (used.count(name));
    used.insert(name);
    return intern(name);
  };

  for (const auto& a_name : t.order()) {
    SymbolId a = ids.at(a_name);
    for (const auto& p : t.productions(a_name)) {
      if (p.size() == 1) {
        add_terminal(a, vocab.id(p[0].name));
        continue;
      }
      std::vector<SymbolId> syms;
      for (const auto& s : p) {
        syms.push_back(s.token ? wrapper_for(s.name) : ids.at(s.name));
      }
      SymbolId lhs = a;
      std::size_t i = 0;
      while (syms.size() - i > 2) {
        std::vector<SymbolId> rest(syms.begin() + static_cast<long>(i) + 1,
                                   syms.end());
        auto key = std::make_pair(a, rest);
        SymbolId next;
        bool fresh = false;
        if (auto it = suffixes.find(key); it != suffixes.end()) {
          next = it->second;
        } else {
          next = fresh_suffix(a);
          suffixes.emplace(key, next);
          fresh = true;
        }
        add_binary(lhs, syms[i], next);
        if (!fresh) {
          lhs = next;
          i = syms.size();
          break;
        }
        lhs = next;
        ++i;
      }
      if (i + 2 == syms.size()) add_binary(lhs, syms[i], syms[i + 1]);
    }
  }
  return CnfGrammar(vocab, std::move(names), ids.at(bnf.entry),
                    std::move(binary), std::move(terminal));
}

CnfGrammar refactor_to_cnf(const Grammar& g) {
  auto [named, vocab] = replace_literals(g);
  return to_cnf(to_bnf(named), vocab);
}

// ---------------------------------------------------------------------------
// CYK

bool cyk_accepts(const CnfGrammar& g, const TokenSeq& w) {
  for (TokenId t : w) {
    if (t >= g.vocab().size()) {
      throw InputError("unknown token id " + std::to_string(t));
    }
  }
  const std::size_t len = w.size();
  if (len == 0) return false;
  const std::size_t nts = g.num_nonterminals();
  // table[(i * (len + 1) + j) * nts + a]
  std::vector<char> table((len + 1) * (len + 1) * nts, 0);
  auto cell = [&](std::size_t i, std::size_t j) {
    return table.data() + (i * (len + 1) + j) * nts;
  };
  for (std::size_t i = 0; i < len; ++i) {
    char* c = cell(i, i + 1);
    for (const auto& t : g.terminal_rules()) {
      if (t.token == w[i]) c[t.lhs] = 1;
    }
  }
  for (std::size_t span = 2; span <= len; ++span) {
    for (std::size_t i = 0; i + span <= len; ++i) {
      const std::size_t j = i + span;
      char* c = cell(i, j);
      for (std::size_t k = i + 1; k < j; ++k) {
        const char* left = cell(i, k);
        const char* right = cell(k, j);
        for (const auto& b : g.binary_rules()) {
          if (left[b.left] && right[b.right]) c[b.lhs] = 1;
        }
      }
    }
  }
  return cell(0, len)[g.entry()] != 0;
}

// ---------------------------------------------------------------------------
// Random derivation

std::optional<TokenSeq> random_derivation(const CnfGrammar& g,
                                          std::size_t max_len, Rng& rng) {
  if (max_len == 0) throw UsageError("random_derivation: max_len must be >= 1");
  constexpr int kRestarts = 50;
  const std::size_t step_budget = 10 * max_len;
  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    TokenSeq out;
    std::vector<SymbolId> pending{g.entry()};
    std::size_t steps = 0;
    bool failed = false;
    while (!pending.empty()) {
      if (++steps > step_budget ||
          out.size() + pending.size() > max_len) {
        failed = true;
        break;
      }
      SymbolId a = pending.back();
      pending.pop_back();
      const auto& rules = g.rules_of(a);
      std::size_t rule = rules[rng.below(rules.size())];
      if (g.is_binary(rule)) {
        const auto& b = g.binary_rules()[rule];
        pending.push_back(b.right);
        pending.push_back(b.left);
      } else {
        out.push_back(g.terminal_rules()[rule - g.binary_rules().size()].token);
      }
    }
    if (!failed) return out;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr std::string_view kCnfMagic = "pcfuzz-cnf";
constexpr int kCnfVersion = 1;
}  // namespace

std::string save_cnf(const CnfGrammar& g) {
  std::ostringstream out;
  out << kCnfMagic << ' ' << kCnfVersion << '\n';
  out << "tokens";
  for (const auto& name : g.vocab().names()) out << ' ' << name;
  out << '\n';
  out << "nonterminals";
  for (const auto& name : g.nonterminals()) out << ' ' << name;
  out << '\n';
  out << "entry " << g.nonterminals()[g.entry()] << '\n';
  for (const auto& b : g.binary_rules()) {
    out << "bin " << g.nonterminals()[b.lhs] << ' ' << g.nonterminals()[b.left]
        << ' ' << g.nonterminals()[b.right] << '\n';
  }
  for (const auto& t : g.terminal_rules()) {
    out << "term " << g.nonterminals()[t.lhs] << ' ' << g.vocab().name(t.token)
        << '\n';
  }
  out << "end\n";
  return out.str();
}

CnfGrammar load_cnf(std::string_view text_in) {
  auto lines = text::split(text_in, '\n');
  std::size_t ln = 0;
  auto fail = [&](const std::string& msg) -> InputError {
    return InputError("CNF file line " + std::to_string(ln + 1) + ": " + msg);
  };
  auto next = [&]() -> std::vector<std::string> {
    while (ln < lines.size()) {
      auto words = text::split_whitespace(lines[ln]);
      if (!words.empty()) return words;
      ++ln;
    }
    throw fail("unexpected end of file");
  };
  auto header = next();
  if (header.size() != 2 || header[0] != kCnfMagic) throw fail("not a CNF file");
  if (header[1] != std::to_string(kCnfVersion)) {
    throw fail("unsupported CNF format version " + header[1] + " (expected " +
               std::to_string(kCnfVersion) + ")");
  }
  ++ln;
  auto toks = next();
  if (toks.empty() || toks[0] != "tokens") throw fail("expected 'tokens'");
  std::vector<std::string> names(toks.begin() + 1, toks.end());
  Vocabulary vocab(names);
  ++ln;
  auto nts = next();
  if (nts.empty() || nts[0] != "nonterminals") {
    throw fail("expected 'nonterminals'");
  }
  std::vector<std::string> nonterminals(nts.begin() + 1, nts.end());
  std::map<std::string, SymbolId> ids;
  for (SymbolId a = 0; a < nonterminals.size(); ++a) {
    if (!ids.emplace(nonterminals[a], a).second) {
      throw fail("duplicate nonterminal " + nonterminals[a]);
    }
  }
  auto nt = [&](const std::string& name) {
    auto it = ids.find(name);
    if (it == ids.end()) throw fail("unknown nonterminal " + name);
    return it->second;
  };
  ++ln;
  auto entry = next();
  if (entry.size() != 2 || entry[0] != "entry") throw fail("expected 'entry'");
  SymbolId entry_id = nt(entry[1]);
  ++ln;
  std::vector<BinaryRule> binary;
  std::vector<TerminalRule> terminal;
  while (true) {
    auto words = next();
    if (words[0] == "end") break;
    if (words[0] == "bin" && words.size() == 4) {
      binary.push_back({nt(words[1]), nt(words[2]), nt(words[3])});
    } else if (words[0] == "term" && words.size() == 3) {
      auto tok = vocab.find(words[2]);
      if (!tok) throw fail("unknown token " + words[2]);
      terminal.push_back({nt(words[1]), *tok});
    } else {
      throw fail("malformed rule line");
    }
    ++ln;
  }
  return CnfGrammar(std::move(vocab), std::move(nonterminals), entry_id,
                    std::move(binary), std::move(terminal));
}

}  // namespace pcfuzz
