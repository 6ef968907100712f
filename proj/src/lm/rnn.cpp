#include "radar/lm/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "radar/core/rng.hpp"

namespace radar::lm {

class RnnState final : public DecodeState {
 public:
  explicit RnnState(const RnnLM& model)
      : model_(model),
        h_(static_cast<std::size_t>(model.cfg_.hidden_dim), 0.0),
        scratch_(h_.size()),
        probs_(model.vocab_.size()) {}

  const std::vector<double>& probs() const override { return probs_; }

  void push(TokenId token) override {
    if (!model_.vocab_.contains(token)) throw Error("rnn: token id out of vocabulary");
    model_.step(h_, token, scratch_);
    std::swap(h_, scratch_);
    refresh();
  }

  void feed(TokenId token) {
    model_.step(h_, token, scratch_);
    std::swap(h_, scratch_);
  }
  void refresh() { model_.output(h_, probs_); }

 private:
  const RnnLM& model_;
  std::vector<double> h_, scratch_, probs_;
};

RnnLM::RnnLM(Vocabulary vocab, RnnConfig cfg) : vocab_(std::move(vocab)), cfg_(cfg) {
  if (cfg_.embed_dim < 1 || cfg_.hidden_dim < 1) throw Error("rnn: dimensions must be positive");
  const auto c = vocab_.size();
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  embed_ = params_.add("E", c, d);
  wx_ = params_.add("Wx", h, d);
  wh_ = params_.add("Wh", h, h);
  bh_ = params_.add("bh", h, 1);
  wo_ = params_.add("Wo", c, h);
  bo_ = params_.add("bo", c, 1);
  Rng rng(cfg_.seed);
  params_.init_normal(rng, cfg_.init_scale);
}

void RnnLM::step(std::span<const double> h_prev, TokenId input, std::span<double> h_next) const {
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  const auto e = params_.view(embed_).subspan(static_cast<std::size_t>(input) * d, d);
  const auto wx = params_.view(wx_);
  const auto wh = params_.view(wh_);
  const auto bh = params_.view(bh_);
  for (std::size_t i = 0; i < h; ++i) {
    double a = bh[i];
    const double* rx = wx.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) a += rx[k] * e[k];
    const double* rh = wh.data() + i * h;
    for (std::size_t k = 0; k < h; ++k) a += rh[k] * h_prev[k];
    h_next[i] = std::tanh(a);
  }
}

void RnnLM::output(std::span<const double> hs, std::span<double> probs) const {
  const auto c = vocab_.size();
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  const auto wo = params_.view(wo_);
  const auto bo = params_.view(bo_);
  double maxz = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < c; ++t) {
    if (t == static_cast<std::size_t>(Vocabulary::kPad) || t == static_cast<std::size_t>(Vocabulary::kBos)) {
      probs[t] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double z = bo[t];
    const double* r = wo.data() + t * h;
    for (std::size_t k = 0; k < h; ++k) z += r[k] * hs[k];
    probs[t] = z;
    maxz = std::max(maxz, z);
  }
  double total = 0.0;
  for (double& z : probs) {
    z = std::exp(z - maxz);
    total += z;
  }
  for (double& z : probs) z /= total;
}

std::unique_ptr<DecodeState> RnnLM::begin(TokenSpan context) const {
  vocab_.validate(context);
  auto state = std::make_unique<RnnState>(*this);
  state->feed(Vocabulary::kBos);
  for (TokenId t : context) state->feed(t);
  state->refresh();
  return state;
}

double RnnLM::Trace::total_log_prob() const { return std::accumulate(log_probs.begin(), log_probs.end(), 0.0); }

RnnLM::Trace RnnLM::forward(TokenSpan prompt, TokenSpan target) const {
  if (target.empty()) throw Error("rnn: empty target");
  vocab_.validate(prompt);
  vocab_.validate(target);
  const auto c = vocab_.size();
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  Trace tr;
  tr.prompt_len = prompt.size();
  tr.target.assign(target.begin(), target.end());
  tr.inputs.reserve(1 + prompt.size() + target.size());
  tr.inputs.push_back(Vocabulary::kBos);
  tr.inputs.insert(tr.inputs.end(), prompt.begin(), prompt.end());
  tr.inputs.insert(tr.inputs.end(), target.begin(), target.end() - 1);
  tr.hidden.assign((tr.inputs.size() + 1) * h, 0.0);
  tr.probs.resize(target.size() * c);
  tr.log_probs.resize(target.size());
  std::span<double> hid(tr.hidden);
  for (std::size_t j = 0; j < tr.inputs.size(); ++j) {
    step(hid.subspan(j * h, h), tr.inputs[j], hid.subspan((j + 1) * h, h));
    if (j >= prompt.size()) {
      const std::size_t t = j - prompt.size();
      auto p = std::span<double>(tr.probs).subspan(t * c, c);
      output(hid.subspan((j + 1) * h, h), p);
      const double pt = p[static_cast<std::size_t>(target[t])];
      tr.log_probs[t] = pt > 0.0 ? std::log(pt) : -std::numeric_limits<double>::infinity();
    }
  }
  return tr;
}

void RnnLM::backward(const Trace& tr, std::span<const double> weights, std::span<double> grad) const {
  if (weights.size() != tr.target.size()) throw Error("rnn: weight count mismatch");
  if (grad.size() != params_.size()) throw Error("rnn: gradient shape mismatch");
  const auto c = vocab_.size();
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
  const auto e_all = params_.view(embed_);
  const auto wx = params_.view(wx_);
  const auto wh = params_.view(wh_);
  const auto wo = params_.view(wo_);
  auto sub = [&](std::size_t block) {
    const auto& b = params_.block(block);
    return grad.subspan(b.offset, b.size());
  };
  auto g_e = sub(embed_), g_wx = sub(wx_), g_wh = sub(wh_), g_bh = sub(bh_), g_wo = sub(wo_), g_bo = sub(bo_);

  std::vector<double> dh(h, 0.0), dh_next(h, 0.0), da(h), dz(c);
  const auto hid = std::span<const double>(tr.hidden);
  for (std::size_t j = tr.inputs.size(); j-- > 0;) {
    std::copy(dh_next.begin(), dh_next.end(), dh.begin());
    const auto h_out = hid.subspan((j + 1) * h, h);
    if (j >= tr.prompt_len) {
      const std::size_t t = j - tr.prompt_len;
      const double w = weights[t];
      if (w != 0.0) {
        const auto p = std::span<const double>(tr.probs).subspan(t * c, c);
        for (std::size_t v = 0; v < c; ++v) dz[v] = -w * p[v];
        dz[static_cast<std::size_t>(tr.target[t])] += w;
        for (std::size_t v = 0; v < c; ++v) {
          if (dz[v] == 0.0) continue;
          g_bo[v] += dz[v];
          double* gr = g_wo.data() + v * h;
          const double* r = wo.data() + v * h;
          for (std::size_t k = 0; k < h; ++k) {
            gr[k] += dz[v] * h_out[k];
            dh[k] += r[k] * dz[v];
          }
        }
      }
    }
    for (std::size_t i = 0; i < h; ++i) da[i] = dh[i] * (1.0 - h_out[i] * h_out[i]);
    const auto x = static_cast<std::size_t>(tr.inputs[j]);
    const auto e = e_all.subspan(x * d, d);
    auto ge = g_e.subspan(x * d, d);
    const auto h_in = hid.subspan(j * h, h);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t i = 0; i < h; ++i) {
      const double a = da[i];
      if (a == 0.0) continue;
      g_bh[i] += a;
      double* gx = g_wx.data() + i * d;
      const double* rx = wx.data() + i * d;
      for (std::size_t k = 0; k < d; ++k) {
        gx[k] += a * e[k];
        ge[k] += rx[k] * a;
      }
      double* gh = g_wh.data() + i * h;
      const double* rh = wh.data() + i * h;
      for (std::size_t k = 0; k < h; ++k) {
        gh[k] += a * h_in[k];
        dh_next[k] += rh[k] * a;
      }
    }
  }
}

}  // namespace radar::lm
