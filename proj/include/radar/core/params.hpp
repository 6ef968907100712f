#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace radar {

class Rng;

/// Named matrix block inside a flat parameter vector (row-major).
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Flat parameter storage. Gradients are plain vectors of the same length.
class ParameterSet {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_.at(i); }
  std::span<double> view(std::size_t i);
  std::span<const double> view(std::size_t i) const;

  /// Fills every block with N(0, scale^2); blocks whose name starts with 'b'
  /// (biases) are zeroed.
  void init_normal(Rng& rng, double scale);

  std::vector<double> zeros_like() const { return std::vector<double>(values_.size(), 0.0); }

  nlohmann::json to_json() const;
  static ParameterSet from_json(const nlohmann::json& j);

 private:
  std::vector<double> values_;
  std::vector<ParamBlock> blocks_;
};

/// In-place first-order update rule.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<double> params, std::span<const double> grads) = 0;
};

/// Plain gradient descent, w <- w - lr * g.
class SgdOptimizer final : public Optimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}
  void step(std::span<double> params, std::span<const double> grads) override;

 private:
  double lr_;
};

/// Mixin for models with a flat trainable parameter vector.
class Parametric {
 public:
  virtual ~Parametric() = default;

  const ParameterSet& parameters() const { return params_; }
  std::size_t num_params() const { return params_.size(); }
  std::vector<double> get_params() const;
  void set_params(std::span<const double> values);

  /// Applies one optimizer step. Throws "frozen model" when frozen.
  void update_params(std::span<const double> grads, Optimizer& optimizer);

  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }

 protected:
  ParameterSet params_;
  bool frozen_ = false;
};

}  // namespace radar
