#include "radar/detectors/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "radar/core/json_io.hpp"
#include "radar/core/rng.hpp"

namespace radar::detectors {

std::array<double, 2> softmax2(const Logits& l) {
  const double m = std::max(l[0], l[1]);
  if (std::isinf(m) && m < 0) return {0.5, 0.5};
  const double e0 = std::exp(l[0] - m);
  const double e1 = std::exp(l[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

SequenceClassifier::SequenceClassifier(Vocabulary vocab, ClassifierConfig cfg)
    : vocab_(std::move(vocab)), cfg_(cfg) {
  if (cfg_.embed_dim < 1 || cfg_.hidden_dim < 0) throw Error("classifier: invalid dimensions");
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  embed_ = params_.add("E", vocab_.size(), d);
  if (h > 0) {
    w1_ = params_.add("W1", h, d);
    b1_ = params_.add("b1", h, 1);
  }
  w2_ = params_.add("W2", 2, h > 0 ? h : d);
  b2_ = params_.add("b2", 2, 1);
  Rng rng(cfg_.seed);
  params_.init_normal(rng, cfg_.init_scale);
}

SequenceClassifier::Activations SequenceClassifier::encode(TokenSpan x) const {
  vocab_.validate(x);
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  Activations a;
  a.pooled.assign(d, 0.0);
  const auto e = params_.view(embed_);
  for (TokenId t : x) {
    if (Vocabulary::is_special(t) && t != Vocabulary::kUnk) continue;
    const auto row = e.subspan(static_cast<std::size_t>(t) * d, d);
    for (std::size_t k = 0; k < d; ++k) a.pooled[k] += row[k];
    ++a.count;
  }
  if (a.count > 0) {
    for (double& v : a.pooled) v /= static_cast<double>(a.count);
  }
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  if (h > 0) {
    const auto w1 = params_.view(w1_);
    const auto b1 = params_.view(b1_);
    a.hidden.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
      double z = b1[i];
      for (std::size_t k = 0; k < d; ++k) z += w1[i * d + k] * a.pooled[k];
      a.hidden[i] = std::tanh(z);
    }
  }
  return a;
}

Logits SequenceClassifier::head(const Activations& a) const {
  const auto& feat = cfg_.hidden_dim > 0 ? a.hidden : a.pooled;
  const auto w2 = params_.view(w2_);
  const auto b2 = params_.view(b2_);
  const std::size_t f = feat.size();
  Logits out{b2[0], b2[1]};
  for (std::size_t k = 0; k < f; ++k) {
    out[0] += w2[k] * feat[k];
    out[1] += w2[f + k] * feat[k];
  }
  return out;
}

Logits SequenceClassifier::logits(TokenSpan x) const { return head(encode(x)); }

void SequenceClassifier::backward(TokenSpan x, const Logits& dl, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw Error("classifier: gradient shape mismatch");
  const auto a = encode(x);
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  const auto& feat = h > 0 ? a.hidden : a.pooled;
  const std::size_t f = feat.size();
  auto sub = [&](std::size_t block) {
    const auto& b = params_.block(block);
    return grad.subspan(b.offset, b.size());
  };
  const auto w2 = params_.view(w2_);
  auto g_w2 = sub(w2_);
  auto g_b2 = sub(b2_);
  g_b2[0] += dl[0];
  g_b2[1] += dl[1];
  std::vector<double> dfeat(f);
  for (std::size_t k = 0; k < f; ++k) {
    g_w2[k] += dl[0] * feat[k];
    g_w2[f + k] += dl[1] * feat[k];
    dfeat[k] = w2[k] * dl[0] + w2[f + k] * dl[1];
  }
  std::vector<double> dpooled(d, 0.0);
  if (h > 0) {
    const auto w1 = params_.view(w1_);
    auto g_w1 = sub(w1_);
    auto g_b1 = sub(b1_);
    for (std::size_t i = 0; i < h; ++i) {
      const double dz = dfeat[i] * (1.0 - a.hidden[i] * a.hidden[i]);
      g_b1[i] += dz;
      for (std::size_t k = 0; k < d; ++k) {
        g_w1[i * d + k] += dz * a.pooled[k];
        dpooled[k] += w1[i * d + k] * dz;
      }
    }
  } else {
    dpooled = dfeat;
  }
  if (a.count == 0) return;
  auto g_e = sub(embed_);
  const double inv = 1.0 / static_cast<double>(a.count);
  for (TokenId t : x) {
    if (Vocabulary::is_special(t) && t != Vocabulary::kUnk) continue;
    auto row = g_e.subspan(static_cast<std::size_t>(t) * d, d);
    for (std::size_t k = 0; k < d; ++k) row[k] += dpooled[k] * inv;
  }
}

nlohmann::json SequenceClassifier::to_json() const {
  return {{"format_version", kCheckpointFormatVersion},
          {"kind", "sequence_classifier"},
          {"vocabulary", vocab_.tokens()},
          {"hyperparameters",
           {{"embed_dim", cfg_.embed_dim},
            {"hidden_dim", cfg_.hidden_dim},
            {"init_scale", cfg_.init_scale},
            {"seed", cfg_.seed}}},
          {"frozen", frozen()},
          {"parameters", params_.to_json()}};
}

SequenceClassifier SequenceClassifier::from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion) throw Error("unsupported checkpoint version");
  if (j.at("kind").get<std::string>() != "sequence_classifier") throw Error("checkpoint is not a sequence classifier");
  const auto& hp = j.at("hyperparameters");
  ClassifierConfig cfg{hp.at("embed_dim").get<int>(), hp.at("hidden_dim").get<int>(),
                       hp.at("init_scale").get<double>(), hp.at("seed").get<std::uint64_t>()};
  SequenceClassifier clf(Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), cfg);
  clf.set_params(ParameterSet::from_json(j.at("parameters")).values());
  clf.set_frozen(j.value("frozen", false));
  return clf;
}

void SequenceClassifier::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

SequenceClassifier SequenceClassifier::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

ForwardBackward classifier_forward_backward(const SequenceClassifier& clf, std::span<const ClassifierExample> batch,
                                            std::optional<double> scale) {
  if (batch.empty()) throw Error("classifier_forward_backward: empty batch");
  const double s = scale.value_or(1.0 / static_cast<double>(batch.size()));
  ForwardBackward out;
  out.grads = clf.parameters().zeros_like();
  for (const auto& ex : batch) {
    const auto l = clf.logits(ex.tokens);
    const auto p = softmax2(l);
    const auto target = static_cast<std::size_t>(ex.target);
    const double pt = p[target];
    const double clamped = std::clamp(pt, kProbClamp, 1.0 - kProbClamp);
    out.loss += s * ex.weight * -std::log(clamped);
    if (ex.weight == 0.0 || clamped != pt) continue;
    // d(-log p_t)/dz = p - onehot(t)
    Logits dl{p[0], p[1]};
    dl[target] -= 1.0;
    dl[0] *= s * ex.weight;
    dl[1] *= s * ex.weight;
    clf.backward(ex.tokens, dl, out.grads);
  }
  return out;
}

}  // namespace radar::detectors
