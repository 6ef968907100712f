#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "radar/core/rng.hpp"
#include "radar/detectors/classifier.hpp"
#include "radar/lm/language_model.hpp"

namespace radar::detectors {

// Zero-shot scores computed from a scoring model's predictive distributions.
// Each averages over positions i = 2..N of x, so N >= 2 is required.

/// Mean log P(x_i | x_<i).
double score_log_p(const lm::LanguageModel& lm, TokenSpan x);
/// Minus the mean 1-based rank of x_i in the descending-sorted distribution
/// (ties ordered by ascending id).
double score_rank(const lm::LanguageModel& lm, TokenSpan x);
/// Minus the mean log of that rank.
double score_log_rank(const lm::LanguageModel& lm, TokenSpan x);
/// Mean Shannon entropy (nats) of the predictive distribution, 0 log 0 = 0.
double score_entropy(const lm::LanguageModel& lm, TokenSpan x);

/// 1-based rank of `token` under `probs`, ties broken by ascending id.
std::size_t token_rank(std::span<const double> probs, TokenId token);

/// Produces one perturbed copy of a text.
using Perturber = std::function<TokenSequence(TokenSpan, Rng&)>;

struct DetectGptConfig {
  int perturbations = 10;
  double mask_fraction = 0.15;
  double sigma_floor = 1e-8;
  void validate() const;
};

/// Masks ceil(mask_fraction * N) distinct positions and refills each, left
/// to right, from `fill_model` given the (already perturbed) left context.
Perturber mask_fill_perturber(const lm::LanguageModel& fill_model, double mask_fraction);

/// (log_p_x - mean) / max(sample std, floor), sample std with k - 1.
double detect_gpt_statistic(double log_p_x, std::span<const double> perturbed_log_probs, double sigma_floor);

/// Perturbation discrepancy of x under `lm`, seeded.
double score_detect_gpt(const lm::LanguageModel& lm, TokenSpan x, const DetectGptConfig& cfg,
                        const Perturber& perturb, std::uint64_t seed);
double score_detect_gpt(const lm::LanguageModel& lm, TokenSpan x, const DetectGptConfig& cfg,
                        const lm::LanguageModel& fill_model, std::uint64_t seed);

/// Probability of AI-text, softmax(f(x))[0].
double score_supervised(const SequenceClassifier& clf, TokenSpan x);

enum class Method { kLogP, kRank, kLogRank, kEntropy, kDetectGpt, kSupervised };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

/// +1 when the raw score already grows with AI-likeness, -1 when it is
/// negated to get there.
int orientation(Method m);

/// A score with a fixed "higher means more likely AI-text" contract.
struct DetectionScore {
  Method method = Method::kSupervised;
  double raw_value = 0.0;
  double ai_score = 0.0;
  bool negated = false;

  static DetectionScore from_raw(Method m, double raw);
};

/// Uniform interface over all detection methods.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual Method method() const = 0;
  /// Identifier used in reports, e.g. "log_p" or "radar".
  virtual std::string name() const = 0;
  /// `seed` only matters for stochastic methods.
  virtual DetectionScore score(TokenSpan x, std::uint64_t seed) const = 0;
};

/// log-p / rank / log-rank / entropy under a scoring model.
std::unique_ptr<Detector> make_lm_detector(Method m, std::shared_ptr<const lm::LanguageModel> lm);
std::unique_ptr<Detector> make_detect_gpt_detector(std::shared_ptr<const lm::LanguageModel> lm,
                                                   std::shared_ptr<const lm::LanguageModel> fill_model,
                                                   DetectGptConfig cfg);
std::unique_ptr<Detector> make_supervised_detector(std::shared_ptr<const SequenceClassifier> clf,
                                                   std::string name = "radar");

}  // namespace radar::detectors
