#include "radar/eval/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "radar/eval/auroc.hpp"

namespace radar::eval {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

RetokenizingDetector::RetokenizingDetector(std::shared_ptr<const detectors::Detector> inner, Vocabulary from,
                                           Vocabulary to)
    : inner_(std::move(inner)), from_(std::move(from)), to_(std::move(to)), same_(from_ == to_) {
  if (!inner_) throw Error("retokenizing detector: missing detector");
}

detectors::DetectionScore RetokenizingDetector::score(TokenSpan x, std::uint64_t seed) const {
  if (same_) return inner_->score(x, seed);
  const auto ids = to_.encode(from_.decode(x));
  return inner_->score(ids, seed);
}

TransferMatrix transfer_from_auroc(std::vector<std::string> models, std::vector<std::vector<double>> auroc) {
  const std::size_t n = models.size();
  if (auroc.size() != n) throw Error("transfer: grid size mismatch");
  TransferMatrix t;
  t.models = std::move(models);
  t.auroc = std::move(auroc);
  t.f_ratio.assign(n, std::vector<std::optional<double>>(n));
  t.holistic.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (t.auroc[a].size() != n) throw Error("transfer: grid size mismatch");
    for (std::size_t b = 0; b < n; ++b) {
      const double denom = t.auroc[b][b];
      if (denom == 0.0) continue;
      t.f_ratio[a][b] = a == b ? 1.0 : t.auroc[a][b] / denom;
      t.holistic[a] += *t.f_ratio[a][b];
    }
  }
  return t;
}

TransferMatrix transfer_matrix(std::span<const TransferInput> inputs, const EvalSchema& schema,
                               const paraphrase::Paraphraser* paraphraser, const lm::SamplingConfig& sampling,
                               std::uint64_t seed) {
  if (inputs.empty()) throw Error("transfer: no models");
  const std::size_t n = inputs.size();
  std::vector<std::string> models;
  std::vector<std::vector<double>> grid(n, std::vector<double>(n, 0.0));
  for (const auto& in : inputs) {
    if (in.detector == nullptr) throw Error("transfer: missing detector for " + in.model);
    models.push_back(in.model);
  }
  for (std::size_t b = 0; b < n; ++b) {
    const auto examples = schema_examples(inputs[b].triples, schema, paraphraser, sampling, seed, inputs[b].model);
    for (std::size_t a = 0; a < n; ++a) {
      const detectors::Detector* d[] = {inputs[a].detector};
      const auto report = score_examples(d, examples, inputs[b].model, schema.name(), seed);
      const auto& r = report.results.front();
      if (!r.auroc) throw Error("transfer: corpus of " + inputs[b].model + " lacks a class");
      grid[a][b] = *r.auroc;
    }
  }
  return transfer_from_auroc(std::move(models), std::move(grid));
}

nlohmann::json TransferMatrix::to_json() const {
  nlohmann::json ratio = nlohmann::json::array();
  for (const auto& row : f_ratio) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(opt_json(v));
    ratio.push_back(r);
  }
  return {{"models", models}, {"auroc", auroc}, {"f_ratio", ratio}, {"holistic", holistic}};
}

std::string TransferMatrix::to_csv() const {
  std::string out = "detector_model,text_model,auroc,f_ratio\n";
  for (std::size_t a = 0; a < models.size(); ++a)
    for (std::size_t b = 0; b < models.size(); ++b)
      out += models[a] + "," + models[b] + "," + fmt(auroc[a][b]) + "," +
             (f_ratio[a][b] ? fmt(*f_ratio[a][b]) : std::string()) + "\n";
  return out;
}

double ensemble_score(double base_ai_score, double augmented_ai_score, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("ensemble: beta must lie in [0, 1]");
  if (beta == 0.0) return base_ai_score;
  if (beta == 1.0) return augmented_ai_score;
  return (1.0 - beta) * base_ai_score + beta * augmented_ai_score;
}

EnsembleDetector::EnsembleDetector(std::shared_ptr<const detectors::Detector> base,
                                   std::shared_ptr<const detectors::Detector> augmented, double beta)
    : base_(std::move(base)), augmented_(std::move(augmented)), beta_(beta) {
  if (!base_ || !augmented_) throw Error("ensemble: missing detector");
  if (!(beta_ >= 0.0 && beta_ <= 1.0)) throw Error("ensemble: beta must lie in [0, 1]");
}

std::string EnsembleDetector::name() const {
  return "ensemble(" + base_->name() + "," + augmented_->name() + "," + fmt(beta_) + ")";
}

detectors::DetectionScore EnsembleDetector::score(TokenSpan x, std::uint64_t seed) const {
  const double a = base_->score(x, seed).ai_score;
  const double b = augmented_->score(x, seed).ai_score;
  const double e = ensemble_score(a, b, beta_);
  detectors::DetectionScore s;
  s.method = detectors::Method::kSupervised;
  s.raw_value = e;
  s.ai_score = e;
  return s;
}

EnsembleSweep ensemble_sweep(std::shared_ptr<const detectors::Detector> base,
                             std::shared_ptr<const detectors::Detector> augmented, std::span<const double> betas,
                             std::span<const EvalExample> examples, std::uint64_t seed) {
  EnsembleSweep sweep;
  sweep.base = base->name();
  sweep.augmented = augmented->name();
  // Score each example once per detector; ensembles reuse those values.
  std::vector<double> a, b;
  std::vector<bool> ai;
  for (const auto& ex : examples) {
    const auto s = mix_seed(seed, ex.seed_key);
    a.push_back(base->score(ex.tokens, s).ai_score);
    b.push_back(augmented->score(ex.tokens, s).ai_score);
    ai.push_back(corpus::is_ai(ex.label));
  }
  auto area = [&](auto&& value) {
    std::vector<ScoredLabel> v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back({value(i), static_cast<bool>(ai[i])});
    return auroc(v);
  };
  sweep.base_auroc = area([&](std::size_t i) { return a[i]; });
  sweep.augmented_auroc = area([&](std::size_t i) { return b[i]; });
  for (double beta : betas) sweep.points.push_back({beta, area([&](std::size_t i) { return ensemble_score(a[i], b[i], beta); })});
  return sweep;
}

nlohmann::json EnsembleSweep::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back({{"beta", p.beta}, {"auroc", p.auroc}});
  return {{"base", base},
          {"augmented", augmented},
          {"base_auroc", base_auroc},
          {"augmented_auroc", augmented_auroc},
          {"points", pts}};
}

std::string EnsembleSweep::to_csv() const {
  std::string out = "beta,auroc\n";
  for (const auto& p : points) out += fmt(p.beta) + "," + fmt(p.auroc) + "\n";
  return out;
}

std::vector<std::vector<std::size_t>> length_partition(std::span<const std::size_t> lengths, int n_buckets) {
  if (n_buckets < 1) throw Error("length buckets: n_buckets must be >= 1");
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return lengths[x] < lengths[y]; });
  const std::size_t n = order.size();
  const auto k = static_cast<std::size_t>(n_buckets);
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t b = 0; b < k; ++b)
    out[b].assign(order.begin() + static_cast<std::ptrdiff_t>(b * n / k),
                  order.begin() + static_cast<std::ptrdiff_t>((b + 1) * n / k));
  return out;
}

std::vector<LengthBucket> length_buckets(const detectors::Detector& detector, std::span<const EvalExample> examples,
                                         int n_buckets, std::uint64_t seed) {
  if (n_buckets < 2) throw Error("length buckets: n_buckets must be >= 2");
  std::vector<double> ai_scores, human_scores;
  std::vector<std::size_t> lengths;
  std::vector<bool> scored;
  for (const auto& ex : examples) {
    std::optional<double> s;
    try {
      s = detector.score(ex.tokens, mix_seed(seed, ex.seed_key)).ai_score;
    } catch (const Error&) {
    }
    if (corpus::is_ai(ex.label)) {
      ai_scores.push_back(s.value_or(0.0));
      scored.push_back(s.has_value());
      lengths.push_back(ex.tokens.size());
    } else if (s) {
      human_scores.push_back(*s);
    }
  }
  const auto parts = length_partition(lengths, n_buckets);
  std::vector<LengthBucket> out;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    LengthBucket bucket;
    bucket.index = b;
    bucket.members = parts[b];
    std::vector<double> ai;
    for (std::size_t i : parts[b])
      if (scored[i]) ai.push_back(ai_scores[i]);
    if (!parts[b].empty()) {
      bucket.min_length = lengths[parts[b].front()];
      bucket.max_length = lengths[parts[b].back()];
    }
    if (!ai.empty() && !human_scores.empty()) bucket.auroc = auroc(ai, human_scores);
    out.push_back(std::move(bucket));
  }
  return out;
}

std::string length_plot_csv(std::span<const LengthBucket> buckets) {
  std::string out = "bucket,min_length,max_length,count,auroc\n";
  for (const auto& b : buckets)
    out += std::to_string(b.index) + "," + std::to_string(b.min_length) + "," + std::to_string(b.max_length) + "," +
           std::to_string(b.members.size()) + "," + (b.auroc ? fmt(*b.auroc) : std::string()) + "\n";
  return out;
}

}  // namespace radar::eval
