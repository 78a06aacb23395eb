#include "pcfuzz/vocabulary.hpp"

#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

Vocabulary::Vocabulary() { add(kEndMarkerName); }

Vocabulary::Vocabulary(const std::vector<std::string>& token_names)
    : Vocabulary() {
  for (const auto& name : token_names) {
    if (name == kEndMarkerName) continue;
    if (find(name)) throw InputError("duplicate token name: " + name);
    add(name);
  }
}

TokenId Vocabulary::add(std::string_view name) {
  if (auto existing = find(name)) return *existing;
  auto id = static_cast<TokenId>(names_.size());
  names_.emplace_back(name);
  index_.emplace(std::string(name), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw InputError("unknown token: " + std::string(name));
}

const std::string& Vocabulary::name(TokenId id) const {
  if (id >= names_.size()) {
    throw InputError("token id out of range: " + std::to_string(id));
  }
  return names_[id];
}

std::vector<TokenId> Vocabulary::real_tokens() const {
  std::vector<TokenId> out;
  for (TokenId t = 1; t < names_.size(); ++t) out.push_back(t);
  return out;
}

TokenSeq Vocabulary::parse_sequence(std::string_view space_separated) const {
  TokenSeq seq;
  for (const auto& word : text::split_whitespace(space_separated)) {
    seq.push_back(id(word));
  }
  return seq;
}

std::string Vocabulary::render(const TokenSeq& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += name(seq[i]);
  }
  return out;
}

}  // namespace pcfuzz
