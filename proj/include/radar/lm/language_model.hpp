#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "radar/core/types.hpp"
#include "radar/core/vocabulary.hpp"

namespace radar::lm {

/// Probability vector over the vocabulary; entries are >= 0 and sum to 1.
struct NextTokenDistribution {
  std::vector<double> probs;
};

/// Incremental decoding cursor. `probs()` is the next-token distribution
/// given everything pushed so far.
class DecodeState {
 public:
  virtual ~DecodeState() = default;
  virtual const std::vector<double>& probs() const = 0;
  virtual void push(TokenId token) = 0;
};

/// Autoregressive language model. Contexts are implicitly preceded by the
/// begin-of-sequence token.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::string kind() const = 0;
  /// Cursor positioned after `context`. Throws on out-of-vocabulary ids.
  virtual std::unique_ptr<DecodeState> begin(TokenSpan context) const = 0;
};

NextTokenDistribution next_token_distribution(const LanguageModel& lm, TokenSpan context);

struct SequenceLogProb {
  double total = 0.0;
  std::vector<double> per_token;
  /// First position whose token had probability zero, if any.
  std::optional<std::size_t> zero_prob_index;
};

/// log P(x | condition) = sum_i log P(x_i | condition, x_<i).
SequenceLogProb sequence_log_prob(const LanguageModel& lm, TokenSpan x, TokenSpan condition = {});

/// Model that assigns 1/C to every token regardless of context.
class UniformLM final : public LanguageModel {
 public:
  explicit UniformLM(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string kind() const override { return "uniform"; }
  std::unique_ptr<DecodeState> begin(TokenSpan context) const override;

 private:
  Vocabulary vocab_;
};

}  // namespace radar::lm
