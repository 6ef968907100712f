#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "radar/lm/language_model.hpp"

namespace radar::lm {

struct NGramConfig {
  int order = 2;
  /// Additive (Laplace) smoothing constant; 1.0 is add-one, 0.0 is maximum
  /// likelihood with back-off to shorter contexts for unseen histories.
  double smoothing = 1.0;
};

/// Count-based n-gram model. Padding and begin-of-sequence tokens are never
/// predicted, so smoothing mass is spread over the remaining C - 2 tokens.
class NGramModel final : public LanguageModel {
 public:
  NGramModel(Vocabulary vocab, NGramConfig cfg);

  /// Adds counts for every document (terminated with end-of-sequence).
  void train(std::span<const TokenSequence> documents);
  /// Adds `count` observations of `token` after `history` (last order-1 ids,
  /// begin-of-sequence padded).
  void add_count(TokenSpan history, TokenId token, double count = 1.0);

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string kind() const override { return "ngram"; }
  std::unique_ptr<DecodeState> begin(TokenSpan context) const override;

  const NGramConfig& config() const { return cfg_; }
  /// Distribution after the given (order-1) history.
  std::vector<double> distribution(TokenSpan history) const;

  nlohmann::json counts_to_json() const;
  void counts_from_json(const nlohmann::json& j);

 private:
  struct Entry {
    double total = 0.0;
    std::map<TokenId, double> counts;
  };
  Vocabulary vocab_;
  NGramConfig cfg_;
  /// counts_[n] holds histories of length n, for n = 0..order-1.
  std::vector<std::map<TokenSequence, Entry>> counts_;
};

}  // namespace radar::lm
