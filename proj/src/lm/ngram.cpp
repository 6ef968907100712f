#include "radar/lm/ngram.hpp"

#include <algorithm>

namespace radar::lm {
namespace {

bool predictable(TokenId id) { return id != Vocabulary::kPad && id != Vocabulary::kBos; }

class NGramState final : public DecodeState {
 public:
  NGramState(const NGramModel& model, TokenSequence history) : model_(model), history_(std::move(history)) {
    probs_ = model_.distribution(history_);
  }
  const std::vector<double>& probs() const override { return probs_; }
  void push(TokenId token) override {
    if (!model_.vocabulary().contains(token)) throw Error("ngram: token id out of vocabulary");
    if (!history_.empty()) {
      history_.erase(history_.begin());
      history_.push_back(token);
    }
    probs_ = model_.distribution(history_);
  }

 private:
  const NGramModel& model_;
  TokenSequence history_;
  std::vector<double> probs_;
};

}  // namespace

NGramModel::NGramModel(Vocabulary vocab, NGramConfig cfg) : vocab_(std::move(vocab)), cfg_(cfg) {
  if (cfg_.order < 1) throw Error("ngram: order must be >= 1");
  if (cfg_.smoothing < 0.0) throw Error("ngram: smoothing must be >= 0");
  counts_.resize(static_cast<std::size_t>(cfg_.order));
}

void NGramModel::add_count(TokenSpan history, TokenId token, double count) {
  if (history.size() != static_cast<std::size_t>(cfg_.order - 1)) throw Error("ngram: history length mismatch");
  vocab_.validate(history);
  if (!vocab_.contains(token) || !predictable(token)) throw Error("ngram: token cannot be predicted");
  for (std::size_t n = 0; n < counts_.size(); ++n) {
    TokenSequence h(history.end() - static_cast<std::ptrdiff_t>(n), history.end());
    auto& e = counts_[n][h];
    e.total += count;
    e.counts[token] += count;
  }
}

void NGramModel::train(std::span<const TokenSequence> documents) {
  const auto ctx = static_cast<std::size_t>(cfg_.order - 1);
  for (const auto& doc : documents) {
    vocab_.validate(doc);
    TokenSequence padded(ctx, Vocabulary::kBos);
    padded.insert(padded.end(), doc.begin(), doc.end());
    padded.push_back(Vocabulary::kEos);
    for (std::size_t i = ctx; i < padded.size(); ++i) {
      add_count(TokenSpan(padded).subspan(i - ctx, ctx), padded[i]);
    }
  }
}

std::vector<double> NGramModel::distribution(TokenSpan history) const {
  const std::size_t c = vocab_.size();
  const double support = static_cast<double>(c - 2);
  std::vector<double> probs(c, 0.0);
  for (std::size_t n = std::min<std::size_t>(history.size(), counts_.size() - 1) + 1; n-- > 0;) {
    TokenSequence h(history.end() - static_cast<std::ptrdiff_t>(n), history.end());
    const auto it = counts_[n].find(h);
    const double total = it == counts_[n].end() ? 0.0 : it->second.total;
    const double denom = total + cfg_.smoothing * support;
    if (denom <= 0.0) continue;
    for (std::size_t t = 0; t < c; ++t) {
      if (predictable(static_cast<TokenId>(t))) probs[t] = cfg_.smoothing / denom;
    }
    if (it != counts_[n].end()) {
      for (const auto& [tok, cnt] : it->second.counts) probs[static_cast<std::size_t>(tok)] += cnt / denom;
    }
    return probs;
  }
  for (std::size_t t = 0; t < c; ++t) {
    if (predictable(static_cast<TokenId>(t))) probs[t] = 1.0 / support;
  }
  return probs;
}

std::unique_ptr<DecodeState> NGramModel::begin(TokenSpan context) const {
  vocab_.validate(context);
  const auto ctx = static_cast<std::size_t>(cfg_.order - 1);
  TokenSequence history(ctx, Vocabulary::kBos);
  for (TokenId t : context) {
    if (ctx == 0) break;
    history.erase(history.begin());
    history.push_back(t);
  }
  return std::make_unique<NGramState>(*this, std::move(history));
}

nlohmann::json NGramModel::counts_to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  const auto& top = counts_.back();
  for (const auto& [hist, entry] : top) {
    for (const auto& [tok, cnt] : entry.counts) {
      rows.push_back({{"history", hist}, {"token", tok}, {"count", cnt}});
    }
  }
  return rows;
}

void NGramModel::counts_from_json(const nlohmann::json& j) {
  counts_.assign(static_cast<std::size_t>(cfg_.order), {});
  for (const auto& row : j) {
    add_count(row.at("history").get<TokenSequence>(), row.at("token").get<TokenId>(), row.at("count").get<double>());
  }
}

}  // namespace radar::lm
