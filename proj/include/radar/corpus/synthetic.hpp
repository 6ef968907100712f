#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace radar::corpus {

/// Two related first-order Markov sources over words "w0".."w{n-1}". Human
/// text comes from one; the other (its logits mixed with fresh noise by
/// `ai_shift`) supplies training text for the target model.
struct SyntheticConfig {
  int vocab_words = 60;
  int documents = 1200;
  int min_len = 32;
  int max_len = 48;
  /// Standard deviation of the random transition logits; larger is peakier.
  double logit_scale = 1.5;
  /// 0 makes the target source identical to the human source.
  double ai_shift = 0.5;
  int target_train_documents = 2000;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j) { return from_json(j, SyntheticConfig{}); }
  static SyntheticConfig from_json(const nlohmann::json& j, const SyntheticConfig& base);
};

struct SyntheticTexts {
  std::vector<std::string> human;
  std::vector<std::string> target_train;
};

SyntheticTexts generate_synthetic(const SyntheticConfig& cfg);

}  // namespace radar::corpus
