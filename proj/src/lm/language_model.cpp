#include "radar/lm/language_model.hpp"

#include <cmath>
#include <limits>

namespace radar::lm {

NextTokenDistribution next_token_distribution(const LanguageModel& lm, TokenSpan context) {
  auto state = lm.begin(context);
  return {state->probs()};
}

SequenceLogProb sequence_log_prob(const LanguageModel& lm, TokenSpan x, TokenSpan condition) {
  if (x.empty()) throw Error("sequence_log_prob: empty sequence");
  lm.vocabulary().validate(x);
  auto state = lm.begin(condition);
  SequenceLogProb out;
  out.per_token.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = state->probs()[static_cast<std::size_t>(x[i])];
    double lp = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    if (p <= 0.0 && !out.zero_prob_index) out.zero_prob_index = i;
    out.per_token.push_back(lp);
    out.total += lp;
    if (i + 1 < x.size()) state->push(x[i]);
  }
  return out;
}

namespace {

class UniformState final : public DecodeState {
 public:
  explicit UniformState(std::size_t c) : probs_(c, 1.0 / static_cast<double>(c)) {}
  const std::vector<double>& probs() const override { return probs_; }
  void push(TokenId) override {}

 private:
  std::vector<double> probs_;
};

}  // namespace

std::unique_ptr<DecodeState> UniformLM::begin(TokenSpan context) const {
  vocab_.validate(context);
  return std::make_unique<UniformState>(vocab_.size());
}

}  // namespace radar::lm
