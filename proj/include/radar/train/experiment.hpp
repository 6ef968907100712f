#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "radar/corpus/corpus.hpp"
#include "radar/corpus/synthetic.hpp"
#include "radar/detectors/classifier.hpp"
#include "radar/lm/ngram.hpp"
#include "radar/lm/rnn.hpp"
#include "radar/train/trainer.hpp"

namespace radar::train {

/// Synthetic robustness study: a detector trained without paraphrased
/// samples against one trained with them, each attacked by the paraphraser
/// trained alongside it.
struct RobustnessConfig {
  corpus::SyntheticConfig synthetic;
  lm::NGramConfig target;
  corpus::CompletionConfig completion;
  /// Fractions of the triples used for training and validation; the rest
  /// is the test set.
  double train_fraction = 0.6;
  double validation_fraction = 0.2;
  lm::RnnConfig paraphraser;
  PretrainConfig pretrain;
  detectors::ClassifierConfig detector;
  TrainConfig train;
  /// Attack with the paraphraser snapshot taken alongside the best detector
  /// instead of the final one.
  bool attack_with_best_paraphraser = false;

  /// Small defaults sized for a single CPU core.
  static RobustnessConfig desk_default();
  nlohmann::json to_json() const;
  static RobustnessConfig from_json(const nlohmann::json& j);
};

struct PreparedTask {
  Vocabulary vocab;
  std::vector<corpus::CorpusTriple> train;
  std::vector<corpus::CorpusTriple> validation;
  std::vector<corpus::CorpusTriple> test;
};

PreparedTask prepare_synthetic_task(const RobustnessConfig& cfg);

struct DetectorRobustness {
  double clean_auroc = 0.0;
  double attacked_auroc = 0.0;
  double drop() const { return clean_auroc - attacked_auroc; }
  double best_validation_auroc = 0.0;
  int best_step = 0;
};

struct RobustnessResult {
  std::uint64_t seed = 0;
  DetectorRobustness baseline;
  DetectorRobustness radar;
  /// baseline drop minus radar drop.
  double margin() const { return baseline.drop() - radar.drop(); }
  nlohmann::json to_json() const;
};

/// Human test texts against original AI test texts (clean) or against their
/// paraphrases by `attacker` (attacked), scored by `detector`.
DetectorRobustness measure_robustness(const detectors::SequenceClassifier& detector, const lm::RnnLM& attacker,
                                      const std::vector<corpus::CorpusTriple>& test, const TrainConfig& cfg);

/// Runs the whole study with every seed in `cfg` replaced by `seed`.
RobustnessResult run_robustness(RobustnessConfig cfg, std::uint64_t seed);

}  // namespace radar::train
