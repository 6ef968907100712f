#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radar/eval/report.hpp"

namespace radar::eval {

/// Scores text tokenized with `from` using a detector whose vocabulary is
/// `to`, by detokenizing and re-encoding.
class RetokenizingDetector final : public detectors::Detector {
 public:
  RetokenizingDetector(std::shared_ptr<const detectors::Detector> inner, Vocabulary from, Vocabulary to);
  detectors::Method method() const override { return inner_->method(); }
  std::string name() const override { return inner_->name(); }
  detectors::DetectionScore score(TokenSpan x, std::uint64_t seed) const override;

 private:
  std::shared_ptr<const detectors::Detector> inner_;
  Vocabulary from_;
  Vocabulary to_;
  bool same_;
};

// ---- cross-model transferability ----

struct TransferInput {
  std::string model;
  const detectors::Detector* detector = nullptr;
  /// Evaluation corpus generated by this model.
  std::span<const corpus::CorpusTriple> triples;
};

struct TransferMatrix {
  std::vector<std::string> models;
  /// auroc[a][b]: detector of model a on the corpus of model b.
  std::vector<std::vector<double>> auroc;
  /// auroc[a][b] / auroc[b][b]; unset when the denominator is zero.
  std::vector<std::vector<std::optional<double>>> f_ratio;
  /// Row sums of f_ratio over the defined entries.
  std::vector<double> holistic;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Fills the matrix from ratios of an AUROC grid.
TransferMatrix transfer_from_auroc(std::vector<std::string> models, std::vector<std::vector<double>> auroc);

TransferMatrix transfer_matrix(std::span<const TransferInput> inputs, const EvalSchema& schema,
                               const paraphrase::Paraphraser* paraphraser, const lm::SamplingConfig& sampling,
                               std::uint64_t seed);

// ---- ensembles ----

/// (1 - beta) * base + beta * augmented on AI-text scores.
double ensemble_score(double base_ai_score, double augmented_ai_score, double beta);

class EnsembleDetector final : public detectors::Detector {
 public:
  EnsembleDetector(std::shared_ptr<const detectors::Detector> base, std::shared_ptr<const detectors::Detector> augmented,
                   double beta);
  detectors::Method method() const override { return detectors::Method::kSupervised; }
  std::string name() const override;
  detectors::DetectionScore score(TokenSpan x, std::uint64_t seed) const override;
  double beta() const { return beta_; }

 private:
  std::shared_ptr<const detectors::Detector> base_;
  std::shared_ptr<const detectors::Detector> augmented_;
  double beta_;
};

struct EnsemblePoint {
  double beta = 0.0;
  double auroc = 0.0;
};

struct EnsembleSweep {
  std::string base;
  std::string augmented;
  double base_auroc = 0.0;
  double augmented_auroc = 0.0;
  std::vector<EnsemblePoint> points;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// AUROC of the ensemble for every beta on the same examples as the two
/// standalone detectors.
EnsembleSweep ensemble_sweep(std::shared_ptr<const detectors::Detector> base,
                             std::shared_ptr<const detectors::Detector> augmented, std::span<const double> betas,
                             std::span<const EvalExample> examples, std::uint64_t seed);

// ---- length buckets ----

struct LengthBucket {
  std::size_t index = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  /// Indices into the AI examples, shortest first.
  std::vector<std::size_t> members;
  /// Unset when the bucket lacks either class.
  std::optional<double> auroc;
};

/// Indices of `lengths` split into `n_buckets` equal-count groups after a
/// stable sort by length. Bucket b holds sorted positions
/// [floor(b n / k), floor((b + 1) n / k)).
std::vector<std::vector<std::size_t>> length_partition(std::span<const std::size_t> lengths, int n_buckets);

/// Per-bucket AUROC of one detector: each AI bucket against all human texts.
std::vector<LengthBucket> length_buckets(const detectors::Detector& detector, std::span<const EvalExample> examples,
                                         int n_buckets, std::uint64_t seed);

/// bucket,min_length,max_length,count,auroc
std::string length_plot_csv(std::span<const LengthBucket> buckets);

}  // namespace radar::eval
