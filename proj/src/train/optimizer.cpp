#include "radar/train/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "radar/core/types.hpp"

namespace radar::train {

double linear_decay_lr(double lr0, std::int64_t t, std::int64_t total_steps) {
  if (total_steps <= 0) return lr0;
  const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(total_steps);
  return lr0 * std::max(0.0, frac);
}

AdamW::AdamW(AdamWConfig cfg, std::size_t num_params) : cfg_(cfg), m_(num_params, 0.0), v_(num_params, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw Error("AdamW: shape mismatch");
  const double lr = current_lr();
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) + cfg_.weight_decay * params[i]);
  }
}

nlohmann::json AdamW::state_to_json() const { return {{"steps", steps_}, {"m", m_}, {"v", v_}}; }

void AdamW::state_from_json(const nlohmann::json& j) {
  auto m = j.at("m").get<std::vector<double>>();
  auto v = j.at("v").get<std::vector<double>>();
  if (m.size() != m_.size() || v.size() != v_.size()) throw Error("AdamW: state shape mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  steps_ = j.at("steps").get<std::int64_t>();
}

}  // namespace radar::train
