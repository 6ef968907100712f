#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "radar/corpus/corpus.hpp"
#include "radar/corpus/synthetic.hpp"
#include "radar/detectors/classifier.hpp"
#include "radar/detectors/scores.hpp"
#include "radar/eval/report.hpp"
#include "radar/lm/ngram.hpp"
#include "radar/lm/rnn.hpp"
#include "radar/train/trainer.hpp"

namespace radar::cli {

inline constexpr int kConfigVersion = 1;

struct DataConfig {
  /// Human-text corpus; the synthetic generator is used when unset.
  std::optional<std::filesystem::path> human_corpus;
  corpus::CorpusFormat human_format = corpus::CorpusFormat::kJsonl;
  /// Training text for the target model; defaults to the human corpus.
  std::optional<std::filesystem::path> target_corpus;
  corpus::SyntheticConfig synthetic;
  lm::NGramConfig target;
  corpus::CompletionConfig completion;
  double train_fraction = 0.6;
  double validation_fraction = 0.2;
};

struct UnseenConfig {
  /// "mock" or "http".
  std::string kind = "mock";
  std::map<std::string, std::string> synonyms;
  bool rotate = true;
  /// http only; the key is read from the environment, never from the file.
  std::string endpoint;
  int max_attempts = 3;
  int max_concurrency = 4;
  double timeout_s = 60.0;
};

struct EvalConfig {
  std::vector<eval::EvalSchema> schemas;
  /// Baseline method names plus "radar".
  std::vector<std::string> detectors;
  detectors::DetectGptConfig detect_gpt;
  UnseenConfig unseen;
  int length_buckets = 5;
};

struct TransferModel {
  std::string model;
  std::filesystem::path checkpoint;
  /// A directory written by `prepare`.
  std::filesystem::path data_dir;
};

struct TransferConfig {
  std::vector<TransferModel> models;
  /// Seen paraphrasing is model specific and not supported here.
  eval::EvalSchema schema;
};

struct EnsembleConfig {
  std::optional<std::filesystem::path> base;
  std::optional<std::filesystem::path> augmented;
  std::vector<double> betas;
  eval::EvalSchema schema;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  /// Root of every output; `--out` overrides it.
  std::filesystem::path out_dir = "radar_run";
  DataConfig data;
  lm::RnnConfig paraphraser;
  train::PretrainConfig pretrain;
  detectors::ClassifierConfig detector;
  train::TrainConfig train;
  EvalConfig eval;
  TransferConfig transfer;
  EnsembleConfig ensemble;

  /// Reference hyperparameters throughout.
  static RunConfig defaults();
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys and version mismatches
  /// are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;
};

/// Seeds of every component, derived from the run seed.
struct DerivedSeeds {
  std::uint64_t synthetic, completion, split, paraphraser, pretrain, detector, train, eval;
  static DerivedSeeds from(std::uint64_t seed);
};

}  // namespace radar::cli
