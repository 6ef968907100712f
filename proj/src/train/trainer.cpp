#include "radar/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "radar/core/json_io.hpp"
#include "radar/eval/auroc.hpp"
#include "radar/lm/checkpoint.hpp"
#include "radar/paraphrase/paraphrase.hpp"

namespace radar::train {

namespace {

constexpr std::uint64_t kValidationStream = 0x76616c6964ULL;
constexpr std::uint64_t kBufferStream = 0x6275666665ULL;

std::int64_t chunks(int n, int size) { return (n + size - 1) / size; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json tokens_json(const Vocabulary& vocab, TokenSpan x) { return vocab.decode(x); }

}  // namespace

void TrainConfig::validate() const {
  ppo.validate();
  detector.validate();
  sampling.validate();
  if (batch_size < 1) throw Error("train: batch_size must be >= 1");
  if (max_steps < 0) throw Error("train: max_steps must be >= 0");
  if (detector_epochs < 0) throw Error("train: detector_epochs must be >= 0");
  if (patience < 0) throw Error("train: patience must be >= 0");
  if (paraphrase_max_len < 1) throw Error("train: paraphrase_max_len must be >= 1");
  if (!(optimizer.lr >= 0.0)) throw Error("train: lr must be >= 0");
}

std::int64_t TrainConfig::paraphraser_updates() const {
  return static_cast<std::int64_t>(max_steps) * ppo.ppo_epochs * chunks(ppo.buffer_size, batch_size);
}

std::int64_t TrainConfig::detector_updates() const {
  return static_cast<std::int64_t>(max_steps) * detector_epochs * chunks(ppo.buffer_size, batch_size);
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"ppo",
       {{"epsilon", ppo.epsilon},
        {"gamma", ppo.gamma},
        {"buffer_size", ppo.buffer_size},
        {"ppo_epochs", ppo.ppo_epochs},
        {"advantage_std_floor", ppo.advantage_std_floor},
        {"per_token_ratio", ppo.per_token_ratio}}},
      {"detector_loss", {{"lambda", detector.lambda}, {"include_paraphrased", detector.include_paraphrased}}},
      {"optimizer",
       {{"name", "adamw"},
        {"lr", optimizer.lr},
        {"lr_schedule", "linear"},
        {"beta1", optimizer.beta1},
        {"beta2", optimizer.beta2},
        {"eps", optimizer.eps},
        {"weight_decay", optimizer.weight_decay}}},
      {"batch_size", batch_size},
      {"max_steps", max_steps},
      {"detector_epochs", detector_epochs},
      {"patience", patience},
      {"paraphrase_max_len", paraphrase_max_len},
      {"sampling", sampling.to_json()},
      {"seed", seed},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  require_known_keys(j,
                     {"ppo", "detector_loss", "optimizer", "batch_size", "max_steps", "detector_epochs", "patience",
                      "paraphrase_max_len", "sampling", "seed"},
                     "train");
  TrainConfig c = base;
  if (j.contains("ppo")) {
    const auto& p = j["ppo"];
    require_known_keys(p, {"epsilon", "gamma", "buffer_size", "ppo_epochs", "advantage_std_floor", "per_token_ratio"},
                       "train.ppo");
    c.ppo.epsilon = p.value("epsilon", c.ppo.epsilon);
    c.ppo.gamma = p.value("gamma", c.ppo.gamma);
    c.ppo.buffer_size = p.value("buffer_size", c.ppo.buffer_size);
    c.ppo.ppo_epochs = p.value("ppo_epochs", c.ppo.ppo_epochs);
    c.ppo.advantage_std_floor = p.value("advantage_std_floor", c.ppo.advantage_std_floor);
    c.ppo.per_token_ratio = p.value("per_token_ratio", c.ppo.per_token_ratio);
  }
  if (j.contains("detector_loss")) {
    const auto& d = j["detector_loss"];
    require_known_keys(d, {"lambda", "include_paraphrased"}, "train.detector_loss");
    c.detector.lambda = d.value("lambda", c.detector.lambda);
    c.detector.include_paraphrased = d.value("include_paraphrased", c.detector.include_paraphrased);
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    require_known_keys(o, {"name", "lr", "lr_schedule", "beta1", "beta2", "eps", "weight_decay"}, "train.optimizer");
    if (o.value("name", std::string("adamw")) != "adamw") throw Error("train.optimizer: only adamw is supported");
    if (o.value("lr_schedule", std::string("linear")) != "linear")
      throw Error("train.optimizer: only the linear schedule is supported");
    c.optimizer.lr = o.value("lr", c.optimizer.lr);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.eps = o.value("eps", c.optimizer.eps);
    c.optimizer.weight_decay = o.value("weight_decay", c.optimizer.weight_decay);
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.detector_epochs = j.value("detector_epochs", c.detector_epochs);
  c.patience = j.value("patience", c.patience);
  c.paraphrase_max_len = j.value("paraphrase_max_len", c.paraphrase_max_len);
  if (j.contains("sampling")) c.sampling = lm::SamplingConfig::from_json(j["sampling"], c.sampling);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

AdamW make_optimizer(const AdamWConfig& base, std::int64_t total, std::size_t n) {
  AdamWConfig c = base;
  c.total_steps = total;
  return AdamW(c, n);
}

}  // namespace

TrainState::TrainState(lm::RnnLM p, detectors::SequenceClassifier d, const TrainConfig& cfg)
    : paraphraser(std::move(p)),
      detector(std::move(d)),
      old_policy(paraphraser.get_params()),
      paraphraser_optimizer(make_optimizer(cfg.optimizer, cfg.paraphraser_updates(), paraphraser.num_params())),
      detector_optimizer(make_optimizer(cfg.optimizer, cfg.detector_updates(), detector.num_params())),
      rng(cfg.seed),
      best_detector(detector.get_params()),
      best_paraphraser(paraphraser.get_params()) {}

double validation_auroc(const detectors::SequenceClassifier& detector, const lm::RnnLM& paraphraser,
                        std::span<const corpus::CorpusTriple> validation, const TrainConfig& cfg) {
  std::vector<double> ai, human;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const auto& t = validation[i];
    human.push_back(detector.prob_ai(t.human.text));
    ai.push_back(detector.prob_ai(t.ai.text));
    if (!cfg.detector.include_paraphrased) continue;
    auto sampling = cfg.sampling;
    sampling.seed = mix_seed(mix_seed(cfg.seed, kValidationStream), i);
    const auto p = paraphrase::seen_paraphrase(paraphraser, t.ai.text, cfg.paraphrase_max_len, sampling);
    ai.push_back(detector.prob_ai(p.text()));
  }
  return eval::auroc(ai, human);
}

namespace {

[[noreturn]] void abort_non_finite(const std::string& what, const TrainState& state,
                                   std::span<const ReplayBufferEntry> batch, const TrainOptions& options) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at step " << state.step + 1 << " (batch of " << batch.size() << ")";
  if (options.diagnostics_path) {
    const auto& vocab = state.paraphraser.vocabulary();
    nlohmann::json dump = {{"step", state.step + 1}, {"loss", what}, {"entries", nlohmann::json::array()}};
    for (const auto& e : batch) {
      nlohmann::json lp = nlohmann::json::array();
      for (double v : e.old_log_probs) lp.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
      dump["entries"].push_back({{"human", tokens_json(vocab, e.human)},
                                 {"original", tokens_json(vocab, e.original)},
                                 {"paraphrased", tokens_json(vocab, e.paraphrased)},
                                 {"reward", e.reward},
                                 {"advantage", e.advantage},
                                 {"old_log_probs", lp}});
    }
    write_json_file(*options.diagnostics_path, dump);
    msg << "; batch written to " << options.diagnostics_path->string();
  }
  throw Error(msg.str());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

std::size_t draw(TrainState& state, std::size_t n) {
  if (state.draw_cursor >= state.draw_order.size()) {
    state.draw_order = shuffled(n, state.rng);
    state.draw_cursor = 0;
  }
  return state.draw_order[state.draw_cursor++];
}

}  // namespace

StepMetrics train_step(TrainState& state, const TrainConfig& cfg, const TrainData& data, const TrainOptions& options) {
  if (data.train.empty()) throw Error("train: empty training corpus");
  if (data.validation.empty()) throw Error("train: empty validation corpus");
  StepMetrics m;
  m.step = state.step + 1;

  // Fill the buffer under the current policy, which becomes the old policy.
  state.old_policy = state.paraphraser.get_params();
  ReplayBuffer buffer(static_cast<std::size_t>(cfg.ppo.buffer_size));
  std::vector<double> rewards;
  const std::uint64_t step_seed = mix_seed(mix_seed(cfg.seed, kBufferStream), static_cast<std::uint64_t>(m.step));
  for (int i = 0; i < cfg.ppo.buffer_size; ++i) {
    const auto& t = data.train[draw(state, data.train.size())];
    auto sampling = cfg.sampling;
    sampling.seed = mix_seed(step_seed, static_cast<std::uint64_t>(i));
    auto p = paraphrase::seen_paraphrase(state.paraphraser, t.ai.text, cfg.paraphrase_max_len, sampling);
    ReplayBufferEntry e;
    e.human = t.human.text;
    e.original = t.ai.text;
    e.reward = compute_reward(state.detector, p.text());
    e.paraphrased = std::move(p.tokens);
    e.old_log_probs = std::move(*p.log_probs);
    rewards.push_back(e.reward);
    e.advantage = 0.0;
    buffer.push(std::move(e));
  }
  const auto adv = normalize_advantages(rewards, cfg.ppo.advantage_std_floor);
  for (std::size_t i = 0; i < adv.size(); ++i) buffer.entries()[i].advantage = adv[i];
  m.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());

  const auto entries = buffer.entries();
  auto batch_of = [&](const std::vector<std::size_t>& order, std::size_t start) {
    std::vector<ReplayBufferEntry> batch;
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
    for (std::size_t i = start; i < end; ++i) batch.push_back(entries[order[i]]);
    return batch;
  };

  double lg_sum = 0.0;
  int lg_count = 0;
  for (int epoch = 0; epoch < cfg.ppo.ppo_epochs; ++epoch) {
    const auto order = shuffled(entries.size(), state.rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto batch = batch_of(order, start);
      auto loss = ppo_loss(state.paraphraser, batch, cfg.ppo);
      if (!std::isfinite(loss.value) || !all_finite(loss.grads)) abort_non_finite("L_G", state, batch, options);
      m.skipped += loss.skipped;
      state.paraphraser.update_params(loss.grads, state.paraphraser_optimizer);
      lg_sum += loss.value;
      ++lg_count;
    }
  }

  double ld_sum = 0.0;
  int ld_count = 0;
  for (int epoch = 0; epoch < cfg.detector_epochs; ++epoch) {
    const auto order = shuffled(entries.size(), state.rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto batch = batch_of(order, start);
      std::vector<TokenSequence> stripped;
      stripped.reserve(batch.size());
      for (const auto& e : batch) stripped.push_back(strip_eos(e.paraphrased));
      std::vector<TripleView> views;
      for (std::size_t i = 0; i < batch.size(); ++i) views.push_back({batch[i].human, batch[i].original, stripped[i]});
      auto loss = detector_loss(state.detector, views, cfg.detector);
      if (!std::isfinite(loss.value) || !all_finite(loss.grads)) abort_non_finite("L_D", state, batch, options);
      state.detector.update_params(loss.grads, state.detector_optimizer);
      ld_sum += loss.value;
      ++ld_count;
    }
  }
  buffer.clear();

  m.paraphraser_loss = lg_count > 0 ? lg_sum / lg_count : 0.0;
  m.detector_loss = ld_count > 0 ? ld_sum / ld_count : 0.0;
  m.validation_auroc = validation_auroc(state.detector, state.paraphraser, data.validation, cfg);
  state.step = m.step;
  if (!state.best_auroc || m.validation_auroc > *state.best_auroc) {
    state.best_auroc = m.validation_auroc;
    state.best_step = m.step;
    state.best_detector = state.detector.get_params();
    state.best_paraphraser = state.paraphraser.get_params();
  }
  state.metrics.push_back(m);
  return m;
}

TrainState run_training(const TrainConfig& cfg, const TrainData& data, lm::RnnLM paraphraser,
                        detectors::SequenceClassifier detector, const TrainOptions& options) {
  cfg.validate();
  if (data.train.empty()) throw Error("train: empty training corpus");
  if (data.validation.empty()) throw Error("train: empty validation corpus");
  if (paraphraser.vocabulary() != detector.vocabulary())
    throw Error("train: paraphraser and detector vocabularies differ");
  TrainState state(std::move(paraphraser), std::move(detector), cfg);
  for (int s = 0; s < cfg.max_steps; ++s) {
    const auto m = train_step(state, cfg, data, options);
    if (options.on_step) options.on_step(m);
    if (cfg.patience > 0 && state.step - state.best_step >= cfg.patience) {
      state.stopped_early = true;
      break;
    }
  }
  return state;
}

std::string metrics_csv(std::span<const StepMetrics> metrics) {
  std::string out = "step,L_D,L_G,mean_reward,validation_auroc\n";
  for (const auto& m : metrics) {
    out += std::to_string(m.step) + "," + fmt(m.detector_loss) + "," + fmt(m.paraphraser_loss) + "," +
           fmt(m.mean_reward) + "," + fmt(m.validation_auroc) + "\n";
  }
  return out;
}

void write_training_outputs(const std::filesystem::path& dir, const TrainConfig& cfg, const TrainState& state) {
  auto best_detector = state.detector;
  best_detector.set_params(state.best_detector);
  auto best_paraphraser = state.paraphraser;
  best_paraphraser.set_params(state.best_paraphraser);
  best_detector.save(dir / "best_detector.json");
  lm::save_lm(dir / "best_paraphraser.json", best_paraphraser);
  state.detector.save(dir / "last" / "detector.json");
  lm::save_lm(dir / "last" / "paraphraser.json", state.paraphraser);
  write_json_file(dir / "last" / "optimizer.json",
                  {{"step", state.step},
                   {"paraphraser", state.paraphraser_optimizer.state_to_json()},
                   {"detector", state.detector_optimizer.state_to_json()},
                   {"old_policy", state.old_policy},
                   {"rng", state.rng.save_state()}});
  write_json_file(dir / "config_snapshot.json", cfg.to_json());
  write_text_file(dir / "metrics.csv", metrics_csv(state.metrics));
  write_json_file(dir / "summary.json",
                  {{"steps", state.step},
                   {"best_step", state.best_step},
                   {"best_validation_auroc", state.best_auroc ? nlohmann::json(*state.best_auroc) : nlohmann::json()},
                   {"stopped_early", state.stopped_early}});
}

double pretrain_paraphraser(lm::RnnLM& policy, std::span<const TokenSequence> texts, const PretrainConfig& cfg) {
  if (texts.empty()) throw Error("pretrain: no texts");
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw Error("pretrain: invalid epochs or batch size");
  AdamWConfig oc;
  oc.lr = cfg.lr;
  oc.weight_decay = 0.0;
  oc.total_steps = static_cast<std::int64_t>(cfg.epochs) * chunks(static_cast<int>(texts.size()), cfg.batch_size);
  AdamW opt(oc, policy.num_params());
  Rng rng(cfg.seed);
  double last = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(texts.size(), rng);
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      auto grads = policy.parameters().zeros_like();
      for (std::size_t i = start; i < end; ++i) {
        const auto& x = texts[order[i]];
        TokenSequence target = x;
        target.push_back(Vocabulary::kEos);
        const auto trace = policy.forward(paraphrase::format_prompt(policy.vocabulary(), x), target);
        nll -= trace.total_log_prob();
        tokens += target.size();
        // Minimize the NLL: the optimizer descends, so weight log-probs by -1/n.
        std::vector<double> w(target.size(), -1.0 / static_cast<double>(end - start));
        policy.backward(trace, w, grads);
      }
      policy.update_params(grads, opt);
    }
    last = nll / static_cast<double>(tokens);
  }
  return last;
}

}  // namespace radar::train
