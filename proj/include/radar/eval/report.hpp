#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radar/corpus/corpus.hpp"
#include "radar/detectors/scores.hpp"
#include "radar/paraphrase/paraphrase.hpp"

namespace radar::eval {

enum class SchemaKind { kNoParaphrase, kSeen, kUnseen };
std::string_view schema_kind_name(SchemaKind k);
SchemaKind parse_schema_kind(std::string_view name);

struct EvalSchema {
  SchemaKind kind = SchemaKind::kNoParaphrase;
  int rounds = 1;
  /// Positives are paraphrased human texts (labeled AI) instead of AI texts.
  bool paraphrase_humans = false;

  void validate() const;
  /// e.g. "no_paraphrase", "seen", "unseen_r3", "unseen_r2_humans".
  std::string name() const;
  nlohmann::json to_json() const;
  static EvalSchema from_json(const nlohmann::json& j);
};

/// One line of a score dump.
struct ScoreRecord {
  std::string id;
  std::string method;
  double raw_value = 0.0;
  double ai_score = 0.0;
  corpus::Label label = corpus::Label::kHuman;
  nlohmann::json to_json() const;
};

struct ScoreSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  static ScoreSummary of(std::span<const double> values);
  nlohmann::json to_json() const;
};

struct MethodResult {
  std::string dataset;
  std::string schema;
  std::string method;
  /// Unset when either class has no scored example.
  std::optional<double> auroc;
  std::size_t n_ai = 0;
  std::size_t n_human = 0;
  /// Examples the method could not score (for instance, too short).
  std::size_t skipped = 0;
  ScoreSummary ai_scores;
  ScoreSummary human_scores;
  std::vector<ScoreRecord> scores;

  /// AUROC recomputed from `scores`.
  std::optional<double> auroc_from_scores() const;
};

struct EvalReport {
  std::vector<MethodResult> results;

  const MethodResult& find(std::string_view dataset, std::string_view schema, std::string_view method) const;
  void append(const EvalReport& other);
  /// {dataset: {schema: {method: {...}}}}.
  nlohmann::json to_json() const;
  /// dataset,schema,method,auroc,n_ai,n_human,skipped
  std::string to_csv() const;
  /// One JSON object per scored example.
  std::string scores_jsonl() const;
};

/// One labeled example ready for scoring.
struct EvalExample {
  std::string id;
  /// Seeds stochastic detectors; shared by the positive at index i across
  /// schemas so that an identity paraphrase reproduces the same scores.
  std::uint64_t seed_key = 0;
  TokenSequence tokens;
  corpus::Label label = corpus::Label::kHuman;
};

/// Builds the examples a schema evaluates: every human text, and as
/// positives the original AI texts, their paraphrases, or paraphrased human
/// texts. Item i is paraphrased with seed mix_seed(seed, i).
std::vector<EvalExample> schema_examples(std::span<const corpus::CorpusTriple> triples, const EvalSchema& schema,
                                         const paraphrase::Paraphraser* paraphraser, const lm::SamplingConfig& sampling,
                                         std::uint64_t seed, std::string_view dataset);

/// Scores `examples` with every detector and computes AUROC per method.
EvalReport score_examples(std::span<const detectors::Detector* const> detectors, std::span<const EvalExample> examples,
                          std::string_view dataset, std::string_view schema, std::uint64_t seed);

/// schema_examples followed by score_examples.
EvalReport run_schema(std::span<const detectors::Detector* const> detectors,
                      std::span<const corpus::CorpusTriple> triples, const EvalSchema& schema,
                      const paraphrase::Paraphraser* paraphraser, const lm::SamplingConfig& sampling,
                      std::uint64_t seed, std::string_view dataset = "dataset");

/// Plot data: AUROC against paraphrase rounds, one row per (dataset, method).
std::string rounds_plot_csv(const EvalReport& report);

}  // namespace radar::eval
