#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "radar/core/params.hpp"
#include "radar/lm/language_model.hpp"

namespace radar::lm {

struct RnnConfig {
  int embed_dim = 16;
  int hidden_dim = 32;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Elman recurrent language model: embedding -> tanh recurrence -> softmax.
/// Padding and begin-of-sequence tokens get probability zero.
class RnnLM final : public LanguageModel, public Parametric {
 public:
  RnnLM(Vocabulary vocab, RnnConfig cfg);

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string kind() const override { return "rnn"; }
  std::unique_ptr<DecodeState> begin(TokenSpan context) const override;

  const RnnConfig& config() const { return cfg_; }

  /// Activations of a teacher-forced pass over `target` after `prompt`.
  struct Trace {
    std::size_t prompt_len = 0;
    TokenSequence inputs;           // bos, prompt, target[0..N-2]
    TokenSequence target;
    std::vector<double> hidden;     // (inputs.size() + 1) x H, row 0 is the zero state
    std::vector<double> probs;      // N x C
    std::vector<double> log_probs;  // N
    double total_log_prob() const;
  };

  Trace forward(TokenSpan prompt, TokenSpan target) const;

  /// grad += sum_t weights[t] * d log P(target[t] | prompt, target[<t]) / d params.
  void backward(const Trace& trace, std::span<const double> weights, std::span<double> grad) const;

 private:
  void step(std::span<const double> h_prev, TokenId input, std::span<double> h_next) const;
  void output(std::span<const double> h, std::span<double> probs) const;

  Vocabulary vocab_;
  RnnConfig cfg_;
  std::size_t embed_ = 0, wx_ = 0, wh_ = 0, bh_ = 0, wo_ = 0, bo_ = 0;

  friend class RnnState;
};

}  // namespace radar::lm
