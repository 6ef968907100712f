#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "radar/detectors/classifier.hpp"
#include "radar/lm/rnn.hpp"

namespace radar::train {

/// One adversarial sample: human text, its AI completion, the paraphrase
/// (as generated, possibly ending in end-of-sequence), the buffer-normalized
/// advantage, and the generating policy's per-token log-probabilities.
struct ReplayBufferEntry {
  TokenSequence human;
  TokenSequence original;
  TokenSequence paraphrased;
  double advantage = 0.0;
  double reward = 0.0;
  std::vector<double> old_log_probs;
};

/// Fixed-capacity store filled once per outer step and then cleared.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(ReplayBufferEntry entry);
  bool full() const { return entries_.size() >= capacity_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::span<const ReplayBufferEntry> entries() const { return entries_; }
  std::span<ReplayBufferEntry> entries() { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  std::vector<ReplayBufferEntry> entries_;
};

/// Detector's probability that x is human-written.
double compute_reward(const detectors::SequenceClassifier& detector, TokenSpan x);

/// (r - mean) / max(population std, floor).
std::vector<double> normalize_advantages(std::span<const double> rewards, double std_floor = 1e-8);

struct PpoConfig {
  double epsilon = 0.2;
  double gamma = 0.01;
  int buffer_size = 256;
  int ppo_epochs = 1;
  double advantage_std_floor = 1e-8;
  /// Importance ratio per token instead of per sequence.
  bool per_token_ratio = false;
  void validate() const;
};

/// min(clip(r, 1 - eps, 1 + eps), r).
double clipped_ratio(double r, double epsilon);

struct PpoLoss {
  double value = 0.0;
  /// Mean of -min(clip(r), r) * A over the entries used.
  double advantage_term = 0.0;
  /// -gamma * S, S = mean over entries of -(1/N) log P(x_p | x_m).
  double entropy_term = 0.0;
  std::vector<double> grads;
  std::vector<double> ratios;
  std::size_t skipped = 0;
};

/// Clipped-ratio policy loss with entropy bonus for the paraphraser, and its
/// gradient with respect to the policy parameters. Entries whose importance
/// ratio is not finite are skipped and counted.
PpoLoss ppo_loss(const lm::RnnLM& policy, std::span<const ReplayBufferEntry> batch, const PpoConfig& cfg);

struct DetectorLossConfig {
  double lambda = 0.5;
  /// When false the paraphrased-text term is dropped (non-adversarial
  /// baseline detector).
  bool include_paraphrased = true;
  void validate() const;
};

struct TripleView {
  TokenSpan human;
  TokenSpan original;
  TokenSpan paraphrased;
};

struct DetectorLoss {
  double value = 0.0;
  double human_term = 0.0;        // mean -log D(x_h)
  double original_term = 0.0;     // mean -log(1 - D(x_m))
  double paraphrased_term = 0.0;  // mean -log(1 - D(x_p))
  double human_weight = 1.0;
  double original_weight = 0.0;
  double paraphrased_weight = 0.0;
  std::vector<double> grads;
};

/// Reweighted logistic loss: human term + lambda * original term
/// + lambda * paraphrased term, each a batch mean, D = P(human).
DetectorLoss detector_loss(const detectors::SequenceClassifier& detector, std::span<const TripleView> batch,
                           const DetectorLossConfig& cfg);

}  // namespace radar::train
