#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "radar/core/params.hpp"
#include "radar/core/vocabulary.hpp"

namespace radar::detectors {

/// Logit index 0 is AI-text, index 1 is human-text.
enum class ClassIndex : int { kAi = 0, kHuman = 1 };
using Logits = std::array<double, 2>;

/// Softmax over two logits; stable for infinite entries.
std::array<double, 2> softmax2(const Logits& logits);
/// Rounded so that prob_human + prob_ai == 1 and each equals 1 minus the other exactly.
inline double prob_human_from_logits(const Logits& l) { return 1.0 - (1.0 - softmax2(l)[1]); }
inline double prob_ai_from_logits(const Logits& l) { return 1.0 - prob_human_from_logits(l); }

struct ClassifierConfig {
  int embed_dim = 16;
  /// 0 puts the linear head directly on the pooled embedding.
  int hidden_dim = 16;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Two-logit text classifier: mean-pooled token embeddings (special tokens
/// ignored) -> optional tanh layer -> linear head.
class SequenceClassifier : public Parametric {
 public:
  SequenceClassifier(Vocabulary vocab, ClassifierConfig cfg);

  const Vocabulary& vocabulary() const { return vocab_; }
  const ClassifierConfig& config() const { return cfg_; }

  Logits logits(TokenSpan x) const;
  double prob_human(TokenSpan x) const { return prob_human_from_logits(logits(x)); }
  double prob_ai(TokenSpan x) const { return prob_ai_from_logits(logits(x)); }

  /// grad += J^T * dlogits for the logits of `x`.
  void backward(TokenSpan x, const Logits& dlogits, std::span<double> grad) const;

  nlohmann::json to_json() const;
  static SequenceClassifier from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SequenceClassifier load(const std::filesystem::path& path);

 private:
  struct Activations {
    std::vector<double> pooled;
    std::vector<double> hidden;
    std::size_t count = 0;
  };
  Activations encode(TokenSpan x) const;
  Logits head(const Activations& a) const;

  Vocabulary vocab_;
  ClassifierConfig cfg_;
  std::size_t embed_ = 0, w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

struct ClassifierExample {
  TokenSpan tokens;
  ClassIndex target = ClassIndex::kAi;
  double weight = 1.0;
};

struct ForwardBackward {
  double loss = 0.0;
  std::vector<double> grads;
};

/// loss = scale * sum_i weight_i * -log clamp(softmax(f(x_i))[target_i]),
/// with scale = 1/n unless given. Probabilities are clamped to
/// [1e-12, 1 - 1e-12]; a clamped term contributes no gradient.
ForwardBackward classifier_forward_backward(const SequenceClassifier& clf, std::span<const ClassifierExample> batch,
                                            std::optional<double> scale = std::nullopt);

inline constexpr double kProbClamp = 1e-12;

}  // namespace radar::detectors
