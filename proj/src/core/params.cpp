#include "radar/core/params.hpp"

#include <algorithm>

#include "radar/core/rng.hpp"
#include "radar/core/types.hpp"

namespace radar {

std::size_t ParameterSet::add(std::string name, std::size_t rows, std::size_t cols) {
  ParamBlock b{std::move(name), values_.size(), rows, cols};
  values_.resize(values_.size() + b.size(), 0.0);
  blocks_.push_back(std::move(b));
  return blocks_.size() - 1;
}

std::span<double> ParameterSet::view(std::size_t i) {
  const auto& b = blocks_.at(i);
  return std::span<double>(values_).subspan(b.offset, b.size());
}

std::span<const double> ParameterSet::view(std::size_t i) const {
  const auto& b = blocks_.at(i);
  return std::span<const double>(values_).subspan(b.offset, b.size());
}

void ParameterSet::init_normal(Rng& rng, double scale) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    auto v = view(i);
    if (!blocks_[i].name.empty() && blocks_[i].name.front() == 'b') {
      std::fill(v.begin(), v.end(), 0.0);
      continue;
    }
    for (double& x : v) x = scale * rng.normal();
  }
}

nlohmann::json ParameterSet::to_json() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto v = view(i);
    blocks.push_back({{"name", blocks_[i].name},
                      {"rows", blocks_[i].rows},
                      {"cols", blocks_[i].cols},
                      {"values", std::vector<double>(v.begin(), v.end())}});
  }
  return blocks;
}

ParameterSet ParameterSet::from_json(const nlohmann::json& j) {
  ParameterSet out;
  for (const auto& b : j) {
    const auto idx = out.add(b.at("name").get<std::string>(), b.at("rows").get<std::size_t>(),
                             b.at("cols").get<std::size_t>());
    const auto values = b.at("values").get<std::vector<double>>();
    auto v = out.view(idx);
    if (values.size() != v.size()) throw Error("parameter block '" + out.block(idx).name + "' has wrong size");
    std::copy(values.begin(), values.end(), v.begin());
  }
  return out;
}

void SgdOptimizer::step(std::span<double> params, std::span<const double> grads) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grads[i];
}

std::vector<double> Parametric::get_params() const {
  const auto v = params_.values();
  return {v.begin(), v.end()};
}

void Parametric::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw Error("set_params: expected " + std::to_string(params_.size()) + " values, got " +
                std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), params_.values().begin());
}

void Parametric::update_params(std::span<const double> grads, Optimizer& optimizer) {
  if (frozen_) throw Error("frozen model");
  if (grads.size() != params_.size()) throw Error("update_params: gradient shape mismatch");
  optimizer.step(params_.values(), grads);
}

}  // namespace radar
