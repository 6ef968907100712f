#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "radar/core/rng.hpp"
#include "radar/lm/language_model.hpp"

namespace radar::lm {

enum class SamplingStrategy { kGreedy, kTopKNucleus };

struct SamplingConfig {
  SamplingStrategy strategy = SamplingStrategy::kTopKNucleus;
  int k = 50;
  double p = 0.95;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  /// k >= 1, p in (0, 1], temperature > 0. A k above the vocabulary size is
  /// non-binding.
  void validate() const;
  /// The seed is not serialized; callers derive it per item.
  nlohmann::json to_json() const;
  static SamplingConfig from_json(const nlohmann::json& j) { return from_json(j, SamplingConfig{}); }
  static SamplingConfig from_json(const nlohmann::json& j, const SamplingConfig& base);
};

/// probs^(1/T), renormalized.
std::vector<double> apply_temperature(std::span<const double> probs, double temperature);

/// Ids sorted by descending probability, ties broken by ascending id.
std::vector<TokenId> sort_descending(std::span<const double> probs);

/// Intersection of the top-k set and the nucleus set (smallest descending
/// prefix with cumulative mass >= p, never empty), in descending order.
/// `probs` is taken as already temperature-adjusted.
std::vector<TokenId> candidate_set(std::span<const double> probs, int k, double p);

/// Argmax with ties broken towards the smaller id.
TokenId greedy_token(std::span<const double> probs);

/// `probs` with padding, unknown and begin-of-sequence tokens removed and
/// the rest renormalized. These tokens are never generated.
std::vector<double> emittable(std::span<const double> probs);

/// One decoding step under `cfg` (temperature, then truncation, then a
/// renormalized draw).
TokenId sample_token(std::span<const double> probs, const SamplingConfig& cfg, Rng& rng);

struct Generation {
  /// Newly generated tokens, including a terminal end-of-sequence token when
  /// one was emitted.
  TokenSequence tokens;
  /// log P_model(token | prompt, previous tokens) under the untruncated model
  /// distribution, one per generated token.
  std::vector<double> log_probs;
};

/// Generates up to `max_new` tokens after `prompt`, seeded by cfg.seed.
Generation generate(const LanguageModel& lm, TokenSpan prompt, int max_new, const SamplingConfig& cfg);

/// prefix + generated continuation (stops at end-of-sequence or max_new).
TokenSequence sample_completion(const LanguageModel& lm, TokenSpan prefix, int max_new, const SamplingConfig& cfg);

}  // namespace radar::lm
