#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "radar/corpus/corpus.hpp"
#include "radar/detectors/classifier.hpp"
#include "radar/lm/rnn.hpp"
#include "radar/lm/sampling.hpp"
#include "radar/train/losses.hpp"
#include "radar/train/optimizer.hpp"

namespace radar::train {

struct TrainConfig {
  PpoConfig ppo;
  DetectorLossConfig detector;
  /// Shared by both models; total_steps is derived from the loop sizes.
  AdamWConfig optimizer;
  int batch_size = 32;
  int max_steps = 100;
  int detector_epochs = 1;
  /// Stop after this many steps without a validation improvement; 0 disables.
  int patience = 0;
  int paraphrase_max_len = 200;
  lm::SamplingConfig sampling;
  std::uint64_t seed = 0;

  void validate() const;
  /// Optimizer steps per model over the whole run.
  std::int64_t paraphraser_updates() const;
  std::int64_t detector_updates() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their values in `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
};

struct StepMetrics {
  int step = 0;
  double detector_loss = 0.0;
  double paraphraser_loss = 0.0;
  double mean_reward = 0.0;
  double validation_auroc = 0.0;
  std::size_t skipped = 0;
};

struct TrainState {
  TrainState(lm::RnnLM paraphraser, detectors::SequenceClassifier detector, const TrainConfig& cfg);

  int step = 0;
  lm::RnnLM paraphraser;
  detectors::SequenceClassifier detector;
  /// Old-policy parameters used to fill the most recent buffer.
  std::vector<double> old_policy;
  AdamW paraphraser_optimizer;
  AdamW detector_optimizer;
  Rng rng;
  std::vector<StepMetrics> metrics;
  /// Unset until the first validation.
  std::optional<double> best_auroc;
  int best_step = 0;
  std::vector<double> best_detector;
  std::vector<double> best_paraphraser;
  /// Order in which training triples are drawn; refilled when exhausted.
  std::vector<std::size_t> draw_order;
  std::size_t draw_cursor = 0;
  bool stopped_early = false;
};

struct TrainData {
  std::vector<corpus::CorpusTriple> train;
  std::vector<corpus::CorpusTriple> validation;
};

struct TrainOptions {
  /// Where the offending batch is written when a loss turns non-finite.
  std::optional<std::filesystem::path> diagnostics_path;
  std::function<void(const StepMetrics&)> on_step;
};

/// Validation AUROC of `detector`: human texts against original AI texts,
/// together with their paraphrases by `paraphraser` when the detector loss
/// includes paraphrased text.
double validation_auroc(const detectors::SequenceClassifier& detector, const lm::RnnLM& paraphraser,
                        std::span<const corpus::CorpusTriple> validation, const TrainConfig& cfg);

/// Adversarial training of the paraphraser (clipped policy objective) and
/// the detector (reweighted logistic loss) with best-on-validation
/// snapshots. Throws on empty corpora and on non-finite losses.
TrainState run_training(const TrainConfig& cfg, const TrainData& data, lm::RnnLM paraphraser,
                        detectors::SequenceClassifier detector, const TrainOptions& options = {});

/// One outer step. Exposed for tests; run_training calls it max_steps times.
StepMetrics train_step(TrainState& state, const TrainConfig& cfg, const TrainData& data,
                       const TrainOptions& options = {});

/// Checkpoint layout: best_detector.json, best_paraphraser.json,
/// last/{detector,paraphraser,optimizer}.json, config_snapshot.json,
/// metrics.csv and summary.json.
void write_training_outputs(const std::filesystem::path& dir, const TrainConfig& cfg, const TrainState& state);

/// The metrics log as CSV text.
std::string metrics_csv(std::span<const StepMetrics> metrics);

/// Teacher-forced maximum likelihood on prompt(x) -> x + end-of-sequence,
/// used to warm-start a paraphraser before adversarial training.
struct PretrainConfig {
  int epochs = 3;
  int batch_size = 16;
  double lr = 1e-2;
  std::uint64_t seed = 0;
};
/// Returns the mean negative log-likelihood per token of the last epoch.
double pretrain_paraphraser(lm::RnnLM& policy, std::span<const TokenSequence> texts, const PretrainConfig& cfg);

}  // namespace radar::train
