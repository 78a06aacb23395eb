#include "pcfuzz/corpus.hpp"

#include <algorithm>

#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

namespace {

struct SpecLine {
  std::size_t line_no;
  std::vector<std::string> fields;
};

std::vector<SpecLine> spec_lines(std::string_view text) {
  std::vector<SpecLine> out;
  auto lines = text::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || text::trim(line)[0] == '#') continue;
    out.push_back({i + 1, text::split(line, '\t')});
  }
  return out;
}

[[noreturn]] void spec_error(const char* what, std::size_t line,
                             const std::string& msg) {
  throw InputError(std::string(what) + " line " + std::to_string(line) + ": " +
                   msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Tokenizer

TokenizerSpec TokenizerSpec::parse(std::string_view text,
                                   const Vocabulary& vocab) {
  TokenizerSpec spec;
  for (const auto& l : spec_lines(text)) {
    if (l.fields.size() != 3) {
      spec_error("tokenizer spec", l.line_no,
                 "expected TOKEN<TAB>kind<TAB>payload");
    }
    Rule r;
    r.token = std::string(text::trim(l.fields[0]));
    const std::string kind(text::trim(l.fields[1]));
    r.pattern = l.fields[2];
    if (r.pattern.empty()) spec_error("tokenizer spec", l.line_no, "empty payload");
    if (kind == "literal") {
      r.kind = Rule::Kind::kLiteral;
    } else if (kind == "regex" || kind == "skip") {
      r.kind = kind == "regex" ? Rule::Kind::kRegex : Rule::Kind::kSkip;
      try {
        r.re = std::regex(r.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        spec_error("tokenizer spec", l.line_no,
                   "bad pattern '" + r.pattern + "': " + e.what());
      }
    } else {
      spec_error("tokenizer spec", l.line_no, "unknown kind '" + kind + "'");
    }
    if (r.kind != Rule::Kind::kSkip) {
      auto id = vocab.find(r.token);
      if (!id || *id == Vocabulary::kEndMarker) {
        spec_error("tokenizer spec", l.line_no,
                   "token '" + r.token + "' is not in the vocabulary");
      }
      r.id = *id;
    }
    spec.rules_.push_back(std::move(r));
  }
  return spec;
}

TokenizerSpec TokenizerSpec::load(const std::filesystem::path& path,
                                  const Vocabulary& vocab) {
  return parse(text::read_file(path), vocab);
}

TokenSeq tokenize(const TokenizerSpec& spec, std::string_view input) {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < input.size()) {
    std::size_t best_len = 0;
    const TokenizerSpec::Rule* best = nullptr;
    const std::string_view rest = input.substr(pos);
    for (const auto& r : spec.rules()) {
      std::size_t len = 0;
      if (r.kind == TokenizerSpec::Rule::Kind::kLiteral) {
        if (rest.substr(0, r.pattern.size()) == r.pattern) len = r.pattern.size();
      } else {
        std::match_results<std::string_view::const_iterator> m;
        if (std::regex_search(rest.begin(), rest.end(), m, r.re,
                              std::regex_constants::match_continuous)) {
          len = static_cast<std::size_t>(m.length(0));
        }
      }
      if (len > best_len) {
        best_len = len;
        best = &r;
      }
    }
    if (!best) {
      throw InputError("no tokenizer rule matches at offset " +
                       std::to_string(pos) + " ('" +
                       std::string(rest.substr(0, 16)) + "')");
    }
    if (best->kind != TokenizerSpec::Rule::Kind::kSkip) out.push_back(best->id);
    pos += best_len;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus

std::size_t Corpus::total_tokens() const {
  std::size_t t = 0;
  for (const auto& item : items) t += item.size();
  return t;
}

FilterResult filter_by_length(const std::vector<TokenSeq>& items, std::size_t n,
                              std::string source) {
  if (n == 0) throw UsageError("filter_by_length: n must be >= 1");
  FilterResult r;
  r.corpus.source = std::move(source);
  r.corpus.max_length = n;
  for (const auto& item : items) {
    if (item.empty() || item.size() > n) {
      ++r.discarded;
    } else {
      r.corpus.items.push_back(item);
    }
  }
  if (r.corpus.items.empty()) {
    throw InputError("corpus" +
                     (r.corpus.source.empty() ? "" : " '" + r.corpus.source + "'") +
                     " is empty after filtering to max length " +
                     std::to_string(n));
  }
  return r;
}

std::vector<TokenSeq> parse_corpus(std::string_view text_in,
                                   const Vocabulary& vocab) {
  std::vector<TokenSeq> items;
  auto lines = text::split(text_in, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      items.push_back(vocab.parse_sequence(lines[i]));
    } catch (const InputError& e) {
      throw InputError("corpus line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return items;
}

std::string format_corpus(const std::vector<TokenSeq>& items,
                          const Vocabulary& vocab) {
  std::string out;
  for (const auto& item : items) {
    out += vocab.render(item);
    out += '\n';
  }
  return out;
}

FilterResult load_corpus(const std::filesystem::path& path,
                         const Vocabulary& vocab, std::size_t n) {
  return filter_by_length(parse_corpus(text::read_file(path), vocab), n,
                          path.filename().string());
}

// ---------------------------------------------------------------------------
// Concretizer

ConcretizerSpec ConcretizerSpec::parse(std::string_view text_in,
                                       const Vocabulary& vocab) {
  ConcretizerSpec spec;
  spec.by_token_.resize(vocab.size());
  for (const auto& l : spec_lines(text_in)) {
    if (l.fields.size() != 3 && l.fields.size() != 4) {
      spec_error("concretizer spec", l.line_no,
                 "expected TOKEN<TAB>kind<TAB>payload[<TAB>nospace]");
    }
    const std::string token(text::trim(l.fields[0]));
    const std::string kind(text::trim(l.fields[1]));
    auto id = vocab.find(token);
    if (!id || *id == Vocabulary::kEndMarker) {
      spec_error("concretizer spec", l.line_no,
                 "token '" + token + "' is not in the vocabulary");
    }
    if (spec.by_token_[*id]) {
      spec_error("concretizer spec", l.line_no,
                 "duplicate descriptor for '" + token + "'");
    }
    Descriptor d;
    if (l.fields.size() == 4) {
      if (text::trim(l.fields[3]) != "nospace") {
        spec_error("concretizer spec", l.line_no,
                   "unknown flag '" + l.fields[3] + "'");
      }
      d.no_space_before = true;
    }
    const std::string& payload = l.fields[2];
    auto add_pool = [&](const std::vector<std::string>& entries) {
      for (const auto& e : entries) {
        if (e.empty()) spec_error("concretizer spec", l.line_no, "empty pool entry");
        bool sensitive = e.size() > 1 && e[0] == '!';
        d.pool.push_back(sensitive ? e.substr(1) : e);
        d.sensitive.push_back(sensitive);
      }
    };
    if (kind == "fixed") {
      d.kind = Descriptor::Kind::kFixed;
      add_pool({payload});
    } else if (kind == "choice" || kind == "ident") {
      d.kind = kind == "choice" ? Descriptor::Kind::kChoice
                                : Descriptor::Kind::kIdent;
      add_pool(text::split(payload, '|'));
    } else if (kind == "int") {
      d.kind = Descriptor::Kind::kIntRange;
      auto dots = payload.find("..");
      if (dots == std::string::npos) {
        spec_error("concretizer spec", l.line_no, "int payload must be lo..hi");
      }
      try {
        d.lo = std::stoll(payload.substr(0, dots));
        d.hi = std::stoll(payload.substr(dots + 2));
      } catch (const std::exception&) {
        spec_error("concretizer spec", l.line_no, "bad int range '" + payload + "'");
      }
      if (d.lo > d.hi) spec_error("concretizer spec", l.line_no, "empty int range");
    } else {
      spec_error("concretizer spec", l.line_no, "unknown kind '" + kind + "'");
    }
    spec.by_token_[*id] = std::move(d);
  }
  return spec;
}

ConcretizerSpec ConcretizerSpec::load(const std::filesystem::path& path,
                                      const Vocabulary& vocab) {
  return parse(text::read_file(path), vocab);
}

const ConcretizerSpec::Descriptor* ConcretizerSpec::find(TokenId t) const {
  if (t >= by_token_.size() || !by_token_[t]) return nullptr;
  return &*by_token_[t];
}

std::vector<TokenId> ConcretizerSpec::missing(const Vocabulary& vocab) const {
  std::vector<TokenId> out;
  for (TokenId t : vocab.real_tokens()) {
    if (!find(t)) out.push_back(t);
  }
  return out;
}

std::vector<TokenId> ConcretizerSpec::sensitive_tokens() const {
  std::vector<TokenId> out;
  for (TokenId t = 0; t < by_token_.size(); ++t) {
    const auto& d = by_token_[t];
    if (!d || d->sensitive.empty()) continue;
    if (std::all_of(d->sensitive.begin(), d->sensitive.end(),
                    [](bool s) { return s; })) {
      out.push_back(t);
    }
  }
  return out;
}

Concretization concretize_detailed(const TokenSeq& tokens,
                                   const ConcretizerSpec& spec,
                                   const Vocabulary& vocab, Rng& rng) {
  Concretization out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto* d = spec.find(tokens[i]);
    if (!d) {
      throw InputError("no concretizer descriptor for token '" +
                       vocab.name(tokens[i]) + "'");
    }
    if (i > 0 && !d->no_space_before) out.text += ' ';
    using Kind = ConcretizerSpec::Descriptor::Kind;
    switch (d->kind) {
      case Kind::kFixed:
        out.text += d->pool[0];
        break;
      case Kind::kChoice:
      case Kind::kIdent: {
        std::size_t pick = rng.below(d->pool.size());
        out.text += d->pool[pick];
        out.uses_sensitive = out.uses_sensitive || d->sensitive[pick];
        break;
      }
      case Kind::kIntRange: {
        auto span = static_cast<std::size_t>(d->hi - d->lo) + 1;
        out.text += std::to_string(d->lo + static_cast<long long>(rng.below(span)));
        break;
      }
    }
  }
  return out;
}

std::string concretize(const TokenSeq& tokens, const ConcretizerSpec& spec,
                       const Vocabulary& vocab, Rng& rng) {
  return concretize_detailed(tokens, spec, vocab, rng).text;
}

}  // namespace pcfuzz
