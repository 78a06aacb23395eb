#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "pcfuzz/rng.hpp"
#include "pcfuzz/vocabulary.hpp"

namespace pcfuzz {

// Maps raw text to token names. Rules are tried at every offset; the longest
// match wins and ties go to the earlier rule.
//
// File format, one rule per line (`#` starts a comment line):
//   TOKEN <TAB> literal <TAB> text
//   TOKEN <TAB> regex   <TAB> ECMAScript pattern
//   NAME  <TAB> skip    <TAB> ECMAScript pattern   (matched text is dropped)
class TokenizerSpec {
 public:
  struct Rule {
    enum class Kind { kLiteral, kRegex, kSkip };
    Kind kind;
    std::string token;
    std::string pattern;
    TokenId id = 0;
    std::regex re;
  };

  static TokenizerSpec parse(std::string_view text, const Vocabulary& vocab);
  static TokenizerSpec load(const std::filesystem::path& path,
                            const Vocabulary& vocab);

  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
};

// Throws InputError naming the offset when no rule matches.
TokenSeq tokenize(const TokenizerSpec& spec, std::string_view text);

// Token-sequence corpus; all items satisfy 1 <= size <= max_length.
struct Corpus {
  std::vector<TokenSeq> items;
  std::string source;
  std::size_t max_length = 0;

  std::size_t total_tokens() const;
};

struct FilterResult {
  Corpus corpus;
  std::size_t discarded = 0;
};

// Drops (never truncates) items longer than n, plus empty items. Throws
// InputError when nothing survives.
FilterResult filter_by_length(const std::vector<TokenSeq>& items, std::size_t n,
                              std::string source = {});

// Corpus file: one item per line, token names separated by single spaces.
// Blank lines are skipped.
std::vector<TokenSeq> parse_corpus(std::string_view text,
                                   const Vocabulary& vocab);
std::string format_corpus(const std::vector<TokenSeq>& items,
                          const Vocabulary& vocab);
FilterResult load_corpus(const std::filesystem::path& path,
                         const Vocabulary& vocab, std::size_t n);

// Per-token generators turning symbolic tokens back into concrete text.
//
// File format, one descriptor per line:
//   TOKEN <TAB> fixed  <TAB> text
//   TOKEN <TAB> choice <TAB> a|b|c
//   TOKEN <TAB> ident  <TAB> name1|name2
//   TOKEN <TAB> int    <TAB> lo..hi
// An optional fourth column `nospace` suppresses the separating space before
// the token. Pool entries prefixed with `!` are tagged sensitive.
class ConcretizerSpec {
 public:
  struct Descriptor {
    enum class Kind { kFixed, kChoice, kIdent, kIntRange };
    Kind kind = Kind::kFixed;
    std::vector<std::string> pool;
    std::vector<bool> sensitive;
    long long lo = 0;
    long long hi = 0;
    bool no_space_before = false;
  };

  static ConcretizerSpec parse(std::string_view text, const Vocabulary& vocab);
  static ConcretizerSpec load(const std::filesystem::path& path,
                              const Vocabulary& vocab);

  const Descriptor* find(TokenId t) const;
  // Tokens of the vocabulary without a descriptor.
  std::vector<TokenId> missing(const Vocabulary& vocab) const;
  // Tokens whose every pool entry is tagged sensitive.
  std::vector<TokenId> sensitive_tokens() const;

 private:
  std::vector<std::optional<Descriptor>> by_token_;
};

struct Concretization {
  std::string text;
  bool uses_sensitive = false;
};

// Throws InputError when a token has no descriptor.
Concretization concretize_detailed(const TokenSeq& tokens,
                                   const ConcretizerSpec& spec,
                                   const Vocabulary& vocab, Rng& rng);
std::string concretize(const TokenSeq& tokens, const ConcretizerSpec& spec,
                       const Vocabulary& vocab, Rng& rng);

}  // namespace pcfuzz
