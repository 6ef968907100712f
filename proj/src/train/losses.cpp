#include "radar/train/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radar/paraphrase/paraphrase.hpp"

namespace radar::train {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error("replay buffer capacity must be >= 1");
  entries_.reserve(capacity_);
}

void ReplayBuffer::push(ReplayBufferEntry entry) {
  if (full()) throw Error("replay buffer is full");
  if (entry.old_log_probs.size() != entry.paraphrased.size()) throw Error("replay entry: log-prob length mismatch");
  if (!std::isfinite(entry.advantage)) throw Error("replay entry: advantage is not finite");
  entries_.push_back(std::move(entry));
}

double compute_reward(const detectors::SequenceClassifier& detector, TokenSpan x) { return detector.prob_human(x); }

std::vector<double> normalize_advantages(std::span<const double> rewards, double std_floor) {
  if (rewards.empty()) throw Error("normalize_advantages: empty buffer");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sd = std::max(std::sqrt(ss / n), std_floor);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / sd);
  return out;
}

void PpoConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error("ppo: epsilon must lie in (0, 1]");
  if (gamma < 0.0) throw Error("ppo: gamma must be >= 0");
  if (buffer_size < 1) throw Error("ppo: buffer_size must be >= 1");
  if (ppo_epochs < 0) throw Error("ppo: ppo_epochs must be >= 0");
  if (!(advantage_std_floor > 0.0)) throw Error("ppo: advantage_std_floor must be positive");
}

double clipped_ratio(double r, double epsilon) { return std::min(std::clamp(r, 1.0 - epsilon, 1.0 + epsilon), r); }

namespace {

double floored(double lp) { return std::isfinite(lp) ? lp : kLogProbFloor; }

}  // namespace

PpoLoss ppo_loss(const lm::RnnLM& policy, std::span<const ReplayBufferEntry> batch, const PpoConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw Error("ppo_loss: empty batch");
  PpoLoss out;
  out.grads = policy.parameters().zeros_like();
  struct Pending {
    lm::RnnLM::Trace trace;
    std::vector<double> weights;
  };
  std::vector<Pending> pending;
  pending.reserve(batch.size());
  for (const auto& e : batch) {
    if (e.paraphrased.empty()) {
      ++out.skipped;
      continue;
    }
    const auto prompt = paraphrase::format_prompt(policy.vocabulary(), e.original);
    auto trace = policy.forward(prompt, e.paraphrased);
    const std::size_t n = e.paraphrased.size();
    std::vector<double> new_lp(n);
    for (std::size_t t = 0; t < n; ++t) new_lp[t] = floored(trace.log_probs[t]);
    std::vector<double> weights(n, 0.0);
    double adv_term = 0.0;
    bool ok = true;
    if (cfg.per_token_ratio) {
      for (std::size_t t = 0; t < n && ok; ++t) {
        const double r = std::exp(new_lp[t] - floored(e.old_log_probs[t]));
        if (!std::isfinite(r)) {
          ok = false;
          break;
        }
        adv_term += -clipped_ratio(r, cfg.epsilon) * e.advantage / static_cast<double>(n);
        // Gradient flows only through the unclipped branch (r <= 1 + eps).
        if (r <= 1.0 + cfg.epsilon) weights[t] = -e.advantage * r / static_cast<double>(n);
      }
      if (ok) out.ratios.push_back(std::nan(""));
    } else {
      const double new_total = std::accumulate(new_lp.begin(), new_lp.end(), 0.0);
      double old_total = 0.0;
      for (double v : e.old_log_probs) old_total += floored(v);
      const double r = std::exp(new_total - old_total);
      if (!std::isfinite(r)) {
        ok = false;
      } else {
        adv_term = -clipped_ratio(r, cfg.epsilon) * e.advantage;
        const double w = r <= 1.0 + cfg.epsilon ? -e.advantage * r : 0.0;
        std::fill(weights.begin(), weights.end(), w);
        out.ratios.push_back(r);
      }
    }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    const double mean_lp = std::accumulate(new_lp.begin(), new_lp.end(), 0.0) / static_cast<double>(n);
    out.advantage_term += adv_term;
    // -gamma * S with S = -(1/N) log P: contributes gamma * mean_lp.
    out.entropy_term += cfg.gamma * mean_lp;
    for (double& w : weights) w += cfg.gamma / static_cast<double>(n);
    pending.push_back({std::move(trace), std::move(weights)});
  }
  if (pending.empty()) return out;
  const double inv = 1.0 / static_cast<double>(pending.size());
  out.advantage_term *= inv;
  out.entropy_term *= inv;
  out.value = out.advantage_term + out.entropy_term;
  for (auto& p : pending) {
    for (double& w : p.weights) w *= inv;
    policy.backward(p.trace, p.weights, out.grads);
  }
  return out;
}

void DetectorLossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("detector loss: lambda must lie in [0, 1]");
}

DetectorLoss detector_loss(const detectors::SequenceClassifier& detector, std::span<const TripleView> batch,
                           const DetectorLossConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw Error("detector_loss: empty batch");
  using detectors::ClassIndex;
  DetectorLoss out;
  out.human_weight = 1.0;
  out.original_weight = cfg.lambda;
  out.paraphrased_weight = cfg.include_paraphrased ? cfg.lambda : 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());

  out.grads = detector.parameters().zeros_like();
  std::vector<detectors::ClassifierExample> human, original, paraphrased;
  for (const auto& t : batch) {
    human.push_back({t.human, ClassIndex::kHuman, 1.0});
    original.push_back({t.original, ClassIndex::kAi, 1.0});
    if (cfg.include_paraphrased) paraphrased.push_back({t.paraphrased, ClassIndex::kAi, 1.0});
  }
  auto accumulate = [&](const std::vector<detectors::ClassifierExample>& group, double weight, double& term) {
    if (group.empty()) return;
    auto fb = detectors::classifier_forward_backward(detector, group, inv);
    term = fb.loss;
    if (weight == 0.0) return;
    out.value += weight * fb.loss;
    for (std::size_t i = 0; i < out.grads.size(); ++i) out.grads[i] += weight * fb.grads[i];
  };
  accumulate(human, out.human_weight, out.human_term);
  accumulate(original, out.original_weight, out.original_term);
  accumulate(paraphrased, out.paraphrased_weight, out.paraphrased_term);
  return out;
}

}  // namespace radar::train
