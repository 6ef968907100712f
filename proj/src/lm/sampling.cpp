#include "radar/lm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "radar/core/json_io.hpp"

namespace radar::lm {

void SamplingConfig::validate() const {
  if (k < 1) throw Error("sampling: k must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw Error("sampling: p must lie in (0, 1]");
  if (!(temperature > 0.0)) throw Error("sampling: temperature must be positive");
}

nlohmann::json SamplingConfig::to_json() const {
  return {{"strategy", strategy == SamplingStrategy::kGreedy ? "greedy" : "top_k_nucleus"},
          {"k", k},
          {"p", p},
          {"temperature", temperature}};
}

SamplingConfig SamplingConfig::from_json(const nlohmann::json& j, const SamplingConfig& base) {
  require_known_keys(j, {"strategy", "k", "p", "temperature"}, "sampling");
  SamplingConfig c = base;
  if (j.contains("strategy")) {
    const std::string strategy = j["strategy"].get<std::string>();
    if (strategy == "greedy") {
      c.strategy = SamplingStrategy::kGreedy;
    } else if (strategy == "top_k_nucleus") {
      c.strategy = SamplingStrategy::kTopKNucleus;
    } else {
      throw Error("sampling: unknown strategy '" + strategy + "'");
    }
  }
  c.k = j.value("k", c.k);
  c.p = j.value("p", c.p);
  c.temperature = j.value("temperature", c.temperature);
  c.validate();
  return c;
}

std::vector<double> apply_temperature(std::span<const double> probs, double temperature) {
  std::vector<double> out(probs.begin(), probs.end());
  if (temperature == 1.0) return out;
  double maxlog = -std::numeric_limits<double>::infinity();
  for (double p : probs) {
    if (p > 0.0) maxlog = std::max(maxlog, std::log(p));
  }
  double total = 0.0;
  for (double& p : out) {
    p = p > 0.0 ? std::exp((std::log(p) - maxlog) / temperature) : 0.0;
    total += p;
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<TokenId> sort_descending(std::span<const double> probs) {
  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  return order;
}

std::vector<TokenId> candidate_set(std::span<const double> probs, int k, double p) {
  auto order = sort_descending(probs);
  const std::size_t top_k = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::size_t nucleus = 0;
  double cumulative = 0.0;
  while (nucleus < order.size()) {
    cumulative += probs[static_cast<std::size_t>(order[nucleus])];
    ++nucleus;
    if (cumulative >= p) break;
  }
  order.resize(std::max<std::size_t>(1, std::min(top_k, nucleus)));
  return order;
}

TokenId greedy_token(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

std::vector<double> emittable(std::span<const double> probs) {
  std::vector<double> out(probs.begin(), probs.end());
  for (TokenId id : {Vocabulary::kPad, Vocabulary::kUnk, Vocabulary::kBos}) {
    if (static_cast<std::size_t>(id) < out.size()) out[static_cast<std::size_t>(id)] = 0.0;
  }
  double total = 0.0;
  for (double p : out) total += p;
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out.at(static_cast<std::size_t>(Vocabulary::kEos)) = 1.0;
    return out;
  }
  for (double& p : out) p /= total;
  return out;
}

TokenId sample_token(std::span<const double> probs, const SamplingConfig& cfg, Rng& rng) {
  const auto allowed = emittable(probs);
  if (cfg.strategy == SamplingStrategy::kGreedy) return greedy_token(allowed);
  const auto tempered = apply_temperature(allowed, cfg.temperature);
  const auto candidates = candidate_set(tempered, cfg.k, cfg.p);
  std::vector<double> weights;
  weights.reserve(candidates.size());
  for (TokenId id : candidates) weights.push_back(tempered[static_cast<std::size_t>(id)]);
  return candidates[rng.categorical(weights)];
}

Generation generate(const LanguageModel& lm, TokenSpan prompt, int max_new, const SamplingConfig& cfg) {
  if (max_new < 1) throw Error("generate: max_new must be >= 1");
  cfg.validate();
  Rng rng(cfg.seed);
  auto state = lm.begin(prompt);
  Generation out;
  for (int i = 0; i < max_new; ++i) {
    const auto& probs = state->probs();
    const TokenId tok = sample_token(probs, cfg, rng);
    const double p = probs[static_cast<std::size_t>(tok)];
    out.tokens.push_back(tok);
    out.log_probs.push_back(p > 0.0 ? std::log(p) : kLogProbFloor);
    if (tok == Vocabulary::kEos) break;
    if (i + 1 < max_new) state->push(tok);
  }
  return out;
}

TokenSequence sample_completion(const LanguageModel& lm, TokenSpan prefix, int max_new, const SamplingConfig& cfg) {
  auto gen = generate(lm, prefix, max_new, cfg);
  TokenSequence out(prefix.begin(), prefix.end());
  out.insert(out.end(), gen.tokens.begin(), gen.tokens.end());
  return out;
}

}  // namespace radar::lm
