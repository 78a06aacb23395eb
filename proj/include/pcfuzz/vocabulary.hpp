#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pcfuzz {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Terminal alphabet. Id 0 is always the reserved end marker; grammar tokens
// follow in insertion order.
class Vocabulary {
 public:
  static constexpr TokenId kEndMarker = 0;
  static constexpr std::string_view kEndMarkerName = "EOF";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& token_names);

  // Returns the existing id when the name is already present.
  TokenId add(std::string_view name);

  std::optional<TokenId> find(std::string_view name) const;
  // Throws InputError for unknown names.
  TokenId id(std::string_view name) const;
  const std::string& name(TokenId id) const;

  std::size_t size() const { return names_.size(); }
  // Ids of grammar tokens, i.e. everything except the end marker.
  std::vector<TokenId> real_tokens() const;
  const std::vector<std::string>& names() const { return names_; }

  TokenSeq parse_sequence(std::string_view space_separated) const;
  std::string render(const TokenSeq& seq) const;

  bool operator==(const Vocabulary& other) const {
    return names_ == other.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace pcfuzz
