#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "radar/core/params.hpp"

namespace radar::train {

struct AdamWConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  /// Length T of the linear decay schedule; 0 keeps the rate constant.
  std::int64_t total_steps = 0;
};

/// lr0 * (1 - t / T), floored at zero; lr0 when T == 0.
double linear_decay_lr(double lr0, std::int64_t t, std::int64_t total_steps);

/// Adam with decoupled weight decay:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   w <- w - lr_t (m_hat / (sqrt(v_hat) + eps) + wd w)
/// where lr_t follows the linear decay schedule.
class AdamW final : public Optimizer {
 public:
  AdamW(AdamWConfig cfg, std::size_t num_params);

  void step(std::span<double> params, std::span<const double> grads) override;

  /// Rate the next step will use.
  double current_lr() const { return linear_decay_lr(cfg_.lr, steps_, cfg_.total_steps); }
  std::int64_t steps() const { return steps_; }
  const AdamWConfig& config() const { return cfg_; }

  nlohmann::json state_to_json() const;
  void state_from_json(const nlohmann::json& j);

 private:
  AdamWConfig cfg_;
  std::vector<double> m_, v_;
  std::int64_t steps_ = 0;
};

}  // namespace radar::train
