#include "radar/corpus/synthetic.hpp"

#include <cmath>

#include "radar/core/json_io.hpp"
#include "radar/core/rng.hpp"
#include "radar/core/types.hpp"

namespace radar::corpus {
namespace {

using Table = std::vector<std::vector<double>>;

Table softmax_rows(const std::vector<std::vector<double>>& logits) {
  Table out = logits;
  for (auto& row : out) {
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - m);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

std::vector<std::string> sample_docs(const Table& trans, int count, int min_len, int max_len, Rng& rng) {
  const std::size_t n = trans.size() - 1;  // last row is the start distribution
  std::vector<std::string> docs;
  docs.reserve(static_cast<std::size_t>(count));
  for (int d = 0; d < count; ++d) {
    const auto len = static_cast<int>(min_len + rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    std::size_t prev = n;
    std::string text;
    for (int i = 0; i < len; ++i) {
      const std::size_t w = rng.categorical(trans[prev]);
      if (!text.empty()) text.push_back(' ');
      text += "w" + std::to_string(w);
      prev = w;
    }
    docs.push_back(std::move(text));
  }
  return docs;
}

}  // namespace

SyntheticTexts generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.vocab_words < 2 || cfg.documents < 1 || cfg.min_len < 1 || cfg.max_len < cfg.min_len) {
    throw Error("synthetic: invalid configuration");
  }
  Rng rng(cfg.seed);
  const auto n = static_cast<std::size_t>(cfg.vocab_words);
  std::vector<std::vector<double>> human_logits(n + 1, std::vector<double>(n));
  std::vector<std::vector<double>> ai_logits = human_logits;
  for (auto& row : human_logits) {
    for (double& v : row) v = cfg.logit_scale * rng.normal();
  }
  for (std::size_t r = 0; r <= n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      ai_logits[r][c] = (1.0 - cfg.ai_shift) * human_logits[r][c] + cfg.ai_shift * cfg.logit_scale * rng.normal();
    }
  }
  SyntheticTexts out;
  Rng human_rng(mix_seed(cfg.seed, 1));
  Rng ai_rng(mix_seed(cfg.seed, 2));
  out.human = sample_docs(softmax_rows(human_logits), cfg.documents, cfg.min_len, cfg.max_len, human_rng);
  out.target_train =
      sample_docs(softmax_rows(ai_logits), cfg.target_train_documents, cfg.min_len, cfg.max_len, ai_rng);
  return out;
}

nlohmann::json SyntheticConfig::to_json() const {
  return {{"vocab_words", vocab_words},       {"documents", documents}, {"min_len", min_len},
          {"max_len", max_len},               {"logit_scale", logit_scale}, {"ai_shift", ai_shift},
          {"target_train_documents", target_train_documents}, {"seed", seed}};
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j, const SyntheticConfig& base) {
  require_known_keys(j, {"vocab_words", "documents", "min_len", "max_len", "logit_scale", "ai_shift",
                         "target_train_documents", "seed"},
                     "synthetic");
  SyntheticConfig c = base;
  c.vocab_words = j.value("vocab_words", c.vocab_words);
  c.documents = j.value("documents", c.documents);
  c.min_len = j.value("min_len", c.min_len);
  c.max_len = j.value("max_len", c.max_len);
  c.logit_scale = j.value("logit_scale", c.logit_scale);
  c.ai_shift = j.value("ai_shift", c.ai_shift);
  c.target_train_documents = j.value("target_train_documents", c.target_train_documents);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace radar::corpus
