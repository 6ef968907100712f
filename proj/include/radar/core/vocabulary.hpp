#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "radar/core/types.hpp"

namespace radar {

/// Splits text on whitespace; ASCII punctuation characters become tokens of
/// their own. "Paraphrase: a b." -> {"Paraphrase", ":", "a", "b", "."}.
std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens with single spaces, without a space before closing
/// punctuation or after opening brackets.
std::string detokenize(std::span<const std::string> tokens);

/// Bijective token <-> id map. Ids 0..3 are reserved for padding, unknown,
/// begin-of-sequence and end-of-sequence.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kNumReserved = 4;

  /// Reserved tokens only.
  Vocabulary();
  /// Full token list; the first four entries must be the reserved tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Reserved tokens, then `extra`, then the sorted distinct tokens of `texts`.
  static Vocabulary build(std::span<const std::string> texts, std::span<const std::string> extra = {});

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  /// Id of `token`, or kUnk.
  TokenId id(std::string_view token) const;
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }
  static bool is_special(TokenId id) { return id >= 0 && id < static_cast<TokenId>(kNumReserved); }

  TokenSequence encode(std::string_view text) const;
  /// Special tokens are dropped.
  std::string decode(TokenSpan ids) const;

  /// Throws if any id is outside the vocabulary.
  void validate(TokenSpan ids) const;

  std::uint64_t checksum() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Copy of `ids` without a trailing end-of-sequence token.
TokenSequence strip_eos(TokenSpan ids);

}  // namespace radar
