#include "radar/detectors/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radar/lm/sampling.hpp"

namespace radar::detectors {
namespace {

void require_scorable(const lm::LanguageModel& lm, TokenSpan x) {
  if (x.size() < 2) throw Error("sequence too short");
  lm.vocabulary().validate(x);
}

/// Calls fn(probs, token) for positions 2..N, returns the mean of fn.
template <typename Fn>
double mean_over_positions(const lm::LanguageModel& lm, TokenSpan x, Fn fn) {
  require_scorable(lm, x);
  auto state = lm.begin({});
  state->push(x[0]);
  double total = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    total += fn(state->probs(), x[i]);
    if (i + 1 < x.size()) state->push(x[i]);
  }
  return total / static_cast<double>(x.size() - 1);
}

}  // namespace

double score_log_p(const lm::LanguageModel& lm, TokenSpan x) {
  return mean_over_positions(lm, x, [](const std::vector<double>& p, TokenId t) {
    const double v = p[static_cast<std::size_t>(t)];
    return v > 0.0 ? std::log(v) : kLogProbFloor;
  });
}

std::size_t token_rank(std::span<const double> probs, TokenId token) {
  const double pt = probs[static_cast<std::size_t>(token)];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] > pt || (probs[j] == pt && static_cast<TokenId>(j) < token)) ++rank;
  }
  return rank;
}

double score_rank(const lm::LanguageModel& lm, TokenSpan x) {
  return -mean_over_positions(lm, x, [](const std::vector<double>& p, TokenId t) {
    return static_cast<double>(token_rank(p, t));
  });
}

double score_log_rank(const lm::LanguageModel& lm, TokenSpan x) {
  return -mean_over_positions(lm, x, [](const std::vector<double>& p, TokenId t) {
    return std::log(static_cast<double>(token_rank(p, t)));
  });
}

double score_entropy(const lm::LanguageModel& lm, TokenSpan x) {
  return mean_over_positions(lm, x, [](const std::vector<double>& p, TokenId) {
    double h = 0.0;
    for (double v : p) {
      if (v > 0.0) h -= v * std::log(v);
    }
    return h;
  });
}

void DetectGptConfig::validate() const {
  if (perturbations < 2) throw Error("DetectGPT needs at least 2 perturbations");
  if (!(mask_fraction > 0.0 && mask_fraction < 1.0)) throw Error("DetectGPT mask_fraction must lie in (0, 1)");
  if (!(sigma_floor > 0.0)) throw Error("DetectGPT sigma_floor must be positive");
}

Perturber mask_fill_perturber(const lm::LanguageModel& fill_model, double mask_fraction) {
  return [&fill_model, mask_fraction](TokenSpan x, Rng& rng) {
    TokenSequence out(x.begin(), x.end());
    const std::size_t n = out.size();
    const auto masked = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(mask_fraction * static_cast<double>(n))));
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    for (std::size_t i = 0; i < masked; ++i) std::swap(pos[i], pos[i + rng.below(n - i)]);
    pos.resize(masked);
    std::sort(pos.begin(), pos.end());
    lm::SamplingConfig ancestral{lm::SamplingStrategy::kTopKNucleus, static_cast<int>(fill_model.vocabulary().size()),
                                 1.0, 1.0, 0};
    for (std::size_t p : pos) {
      auto state = fill_model.begin(TokenSpan(out.data(), p));
      auto probs = lm::emittable(state->probs());
      probs[static_cast<std::size_t>(Vocabulary::kEos)] = 0.0;
      if (std::all_of(probs.begin(), probs.end(), [](double v) { return v <= 0.0; })) continue;
      out[p] = lm::sample_token(probs, ancestral, rng);
    }
    return out;
  };
}

double detect_gpt_statistic(double log_p_x, std::span<const double> perturbed, double sigma_floor) {
  const auto k = perturbed.size();
  if (k < 2) throw Error("DetectGPT needs at least 2 perturbations");
  if (std::all_of(perturbed.begin(), perturbed.end(), [&](double v) { return v == perturbed[0]; }) &&
      log_p_x == perturbed[0])
    return 0.0;
  const double mean = std::accumulate(perturbed.begin(), perturbed.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double v : perturbed) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / static_cast<double>(k - 1));
  return (log_p_x - mean) / std::max(sigma, sigma_floor);
}

double score_detect_gpt(const lm::LanguageModel& lm, TokenSpan x, const DetectGptConfig& cfg,
                        const Perturber& perturb, std::uint64_t seed) {
  cfg.validate();
  auto floored = [](double v) { return std::isfinite(v) ? v : kLogProbFloor; };
  const double log_p_x = floored(lm::sequence_log_prob(lm, x).total);
  Rng rng(seed);
  std::vector<double> perturbed;
  perturbed.reserve(static_cast<std::size_t>(cfg.perturbations));
  for (int i = 0; i < cfg.perturbations; ++i) {
    const auto xt = perturb(x, rng);
    perturbed.push_back(floored(lm::sequence_log_prob(lm, xt).total));
  }
  return detect_gpt_statistic(log_p_x, perturbed, cfg.sigma_floor);
}

double score_detect_gpt(const lm::LanguageModel& lm, TokenSpan x, const DetectGptConfig& cfg,
                        const lm::LanguageModel& fill_model, std::uint64_t seed) {
  return score_detect_gpt(lm, x, cfg, mask_fill_perturber(fill_model, cfg.mask_fraction), seed);
}

double score_supervised(const SequenceClassifier& clf, TokenSpan x) { return clf.prob_ai(x); }

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kLogP:
      return "log_p";
    case Method::kRank:
      return "rank";
    case Method::kLogRank:
      return "log_rank";
    case Method::kEntropy:
      return "entropy";
    case Method::kDetectGpt:
      return "detect_gpt";
    case Method::kSupervised:
      return "supervised";
  }
  return "supervised";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kLogP, Method::kRank, Method::kLogRank, Method::kEntropy, Method::kDetectGpt,
                   Method::kSupervised}) {
    if (method_name(m) == name) return m;
  }
  throw Error("unknown detection method '" + std::string(name) + "'");
}

int orientation(Method m) {
  // Low predictive entropy marks text from confident (model-like) contexts.
  return m == Method::kEntropy ? -1 : 1;
}

DetectionScore DetectionScore::from_raw(Method m, double raw) {
  const int sign = orientation(m);
  return {m, raw, sign * raw, sign < 0};
}

namespace {

class LmDetector final : public Detector {
 public:
  LmDetector(Method m, std::shared_ptr<const lm::LanguageModel> lm) : method_(m), lm_(std::move(lm)) {}
  Method method() const override { return method_; }
  std::string name() const override { return std::string(method_name(method_)); }
  DetectionScore score(TokenSpan x, std::uint64_t) const override {
    double raw = 0.0;
    switch (method_) {
      case Method::kLogP:
        raw = score_log_p(*lm_, x);
        break;
      case Method::kRank:
        raw = score_rank(*lm_, x);
        break;
      case Method::kLogRank:
        raw = score_log_rank(*lm_, x);
        break;
      case Method::kEntropy:
        raw = score_entropy(*lm_, x);
        break;
      default:
        throw Error("not a language-model statistic");
    }
    return DetectionScore::from_raw(method_, raw);
  }

 private:
  Method method_;
  std::shared_ptr<const lm::LanguageModel> lm_;
};

class DetectGptDetector final : public Detector {
 public:
  DetectGptDetector(std::shared_ptr<const lm::LanguageModel> lm, std::shared_ptr<const lm::LanguageModel> fill,
                    DetectGptConfig cfg)
      : lm_(std::move(lm)), fill_(std::move(fill)), cfg_(cfg) {
    cfg_.validate();
  }
  Method method() const override { return Method::kDetectGpt; }
  std::string name() const override { return "detect_gpt"; }
  DetectionScore score(TokenSpan x, std::uint64_t seed) const override {
    return DetectionScore::from_raw(Method::kDetectGpt, score_detect_gpt(*lm_, x, cfg_, *fill_, seed));
  }

 private:
  std::shared_ptr<const lm::LanguageModel> lm_, fill_;
  DetectGptConfig cfg_;
};

class SupervisedDetector final : public Detector {
 public:
  SupervisedDetector(std::shared_ptr<const SequenceClassifier> clf, std::string name)
      : clf_(std::move(clf)), name_(std::move(name)) {}
  Method method() const override { return Method::kSupervised; }
  std::string name() const override { return name_; }
  DetectionScore score(TokenSpan x, std::uint64_t) const override {
    return DetectionScore::from_raw(Method::kSupervised, score_supervised(*clf_, x));
  }

 private:
  std::shared_ptr<const SequenceClassifier> clf_;
  std::string name_;
};

}  // namespace

std::unique_ptr<Detector> make_lm_detector(Method m, std::shared_ptr<const lm::LanguageModel> lm) {
  if (m == Method::kDetectGpt || m == Method::kSupervised) throw Error("not a language-model statistic");
  return std::make_unique<LmDetector>(m, std::move(lm));
}

std::unique_ptr<Detector> make_detect_gpt_detector(std::shared_ptr<const lm::LanguageModel> lm,
                                                   std::shared_ptr<const lm::LanguageModel> fill_model,
                                                   DetectGptConfig cfg) {
  return std::make_unique<DetectGptDetector>(std::move(lm), std::move(fill_model), cfg);
}

std::unique_ptr<Detector> make_supervised_detector(std::shared_ptr<const SequenceClassifier> clf, std::string name) {
  return std::make_unique<SupervisedDetector>(std::move(clf), std::move(name));
}

}  // namespace radar::detectors
