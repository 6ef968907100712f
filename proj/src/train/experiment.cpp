#include "radar/train/experiment.hpp"

#include "radar/core/json_io.hpp"
#include "radar/eval/auroc.hpp"
#include "radar/paraphrase/paraphrase.hpp"

namespace radar::train {

namespace {

constexpr std::uint64_t kTestStream = 0x74657374ULL;

}  // namespace

RobustnessConfig RobustnessConfig::desk_default() {
  RobustnessConfig c;
  c.synthetic.vocab_words = 40;
  c.synthetic.documents = 600;
  c.synthetic.min_len = 16;
  c.synthetic.max_len = 24;
  c.synthetic.logit_scale = 2.0;
  c.synthetic.ai_shift = 1.0;
  c.synthetic.target_train_documents = 2000;
  c.completion.prompt_len = 4;
  c.completion.max_len = 24;
  c.paraphraser.embed_dim = 16;
  c.paraphraser.hidden_dim = 32;
  c.pretrain.epochs = 3;
  c.pretrain.batch_size = 16;
  c.pretrain.lr = 1e-2;
  c.detector.embed_dim = 16;
  c.detector.hidden_dim = 8;
  c.train.ppo.buffer_size = 128;
  c.train.batch_size = 32;
  c.train.max_steps = 100;
  c.train.optimizer.lr = 3e-4;
  c.train.paraphrase_max_len = 24;
  return c;
}

nlohmann::json RobustnessConfig::to_json() const {
  return {{"synthetic", synthetic.to_json()},
          {"target", {{"order", target.order}, {"smoothing", target.smoothing}}},
          {"completion",
           {{"prompt_len", completion.prompt_len},
            {"max_len", completion.max_len},
            {"sampling", completion.sampling.to_json()}}},
          {"train_fraction", train_fraction},
          {"validation_fraction", validation_fraction},
          {"paraphraser",
           {{"embed_dim", paraphraser.embed_dim},
            {"hidden_dim", paraphraser.hidden_dim},
            {"init_scale", paraphraser.init_scale}}},
          {"pretrain",
           {{"epochs", pretrain.epochs}, {"batch_size", pretrain.batch_size}, {"lr", pretrain.lr}}},
          {"detector",
           {{"embed_dim", detector.embed_dim},
            {"hidden_dim", detector.hidden_dim},
            {"init_scale", detector.init_scale}}},
          {"train", train.to_json()},
          {"attack_with_best_paraphraser", attack_with_best_paraphraser}};
}

RobustnessConfig RobustnessConfig::from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"synthetic", "target", "completion", "train_fraction", "validation_fraction", "paraphraser",
                      "pretrain", "detector", "train", "attack_with_best_paraphraser"},
                     "robustness");
  RobustnessConfig c = desk_default();
  if (j.contains("synthetic")) c.synthetic = corpus::SyntheticConfig::from_json(j["synthetic"], c.synthetic);
  if (j.contains("target")) {
    const auto& t = j["target"];
    require_known_keys(t, {"order", "smoothing"}, "robustness.target");
    c.target.order = t.value("order", c.target.order);
    c.target.smoothing = t.value("smoothing", c.target.smoothing);
  }
  if (j.contains("completion")) {
    const auto& t = j["completion"];
    require_known_keys(t, {"prompt_len", "max_len", "sampling"}, "robustness.completion");
    c.completion.prompt_len = t.value("prompt_len", c.completion.prompt_len);
    c.completion.max_len = t.value("max_len", c.completion.max_len);
    if (t.contains("sampling")) c.completion.sampling = lm::SamplingConfig::from_json(t["sampling"], c.completion.sampling);
  }
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  if (j.contains("paraphraser")) {
    const auto& t = j["paraphraser"];
    require_known_keys(t, {"embed_dim", "hidden_dim", "init_scale"}, "robustness.paraphraser");
    c.paraphraser.embed_dim = t.value("embed_dim", c.paraphraser.embed_dim);
    c.paraphraser.hidden_dim = t.value("hidden_dim", c.paraphraser.hidden_dim);
    c.paraphraser.init_scale = t.value("init_scale", c.paraphraser.init_scale);
  }
  if (j.contains("pretrain")) {
    const auto& t = j["pretrain"];
    require_known_keys(t, {"epochs", "batch_size", "lr"}, "robustness.pretrain");
    c.pretrain.epochs = t.value("epochs", c.pretrain.epochs);
    c.pretrain.batch_size = t.value("batch_size", c.pretrain.batch_size);
    c.pretrain.lr = t.value("lr", c.pretrain.lr);
  }
  if (j.contains("detector")) {
    const auto& t = j["detector"];
    require_known_keys(t, {"embed_dim", "hidden_dim", "init_scale"}, "robustness.detector");
    c.detector.embed_dim = t.value("embed_dim", c.detector.embed_dim);
    c.detector.hidden_dim = t.value("hidden_dim", c.detector.hidden_dim);
    c.detector.init_scale = t.value("init_scale", c.detector.init_scale);
  }
  if (j.contains("train")) c.train = TrainConfig::from_json(j["train"], c.train);
  c.attack_with_best_paraphraser = j.value("attack_with_best_paraphraser", c.attack_with_best_paraphraser);
  return c;
}

PreparedTask prepare_synthetic_task(const RobustnessConfig& cfg) {
  const auto texts = corpus::generate_synthetic(cfg.synthetic);
  PreparedTask task;
  const auto extra = paraphrase::prompt_tokens();
  std::vector<std::string> all = texts.human;
  all.insert(all.end(), texts.target_train.begin(), texts.target_train.end());
  task.vocab = Vocabulary::build(all, extra);

  lm::NGramModel target(task.vocab, cfg.target);
  std::vector<TokenSequence> target_docs;
  for (const auto& t : texts.target_train) target_docs.push_back(task.vocab.encode(t));
  target.train(target_docs);

  std::vector<corpus::LabeledExample> human;
  for (const auto& t : texts.human) human.push_back(corpus::make_example(task.vocab, t, corpus::Label::kHuman, "synthetic"));
  const auto ai = corpus::build_ai_corpus(human, target, cfg.completion, "target");

  auto splits = corpus::split_three_way(
      ai.triples, corpus::SplitConfig{cfg.train_fraction, cfg.validation_fraction, mix_seed(cfg.synthetic.seed, 1)});
  task.train = std::move(splits.train);
  task.validation = std::move(splits.validation);
  task.test = std::move(splits.test);
  return task;
}

DetectorRobustness measure_robustness(const detectors::SequenceClassifier& detector, const lm::RnnLM& attacker,
                                      const std::vector<corpus::CorpusTriple>& test, const TrainConfig& cfg) {
  std::vector<double> human, clean, attacked;
  for (std::size_t i = 0; i < test.size(); ++i) {
    human.push_back(detector.prob_ai(test[i].human.text));
    clean.push_back(detector.prob_ai(test[i].ai.text));
    auto sampling = cfg.sampling;
    sampling.seed = mix_seed(mix_seed(cfg.seed, kTestStream), i);
    const auto p = paraphrase::seen_paraphrase(attacker, test[i].ai.text, cfg.paraphrase_max_len, sampling);
    attacked.push_back(detector.prob_ai(p.text()));
  }
  DetectorRobustness r;
  r.clean_auroc = eval::auroc(clean, human);
  r.attacked_auroc = eval::auroc(attacked, human);
  return r;
}

RobustnessResult run_robustness(RobustnessConfig cfg, std::uint64_t seed) {
  cfg.synthetic.seed = seed;
  cfg.completion.seed = mix_seed(seed, 11);
  cfg.paraphraser.seed = mix_seed(seed, 12);
  cfg.pretrain.seed = mix_seed(seed, 13);
  cfg.detector.seed = mix_seed(seed, 14);
  cfg.train.seed = mix_seed(seed, 15);
  const auto task = prepare_synthetic_task(cfg);

  lm::RnnLM policy(task.vocab, cfg.paraphraser);
  std::vector<TokenSequence> ai_texts;
  for (const auto& t : task.train) ai_texts.push_back(t.ai.text);
  pretrain_paraphraser(policy, ai_texts, cfg.pretrain);
  const detectors::SequenceClassifier detector(task.vocab, cfg.detector);
  const TrainData data{task.train, task.validation};

  RobustnessResult out;
  out.seed = seed;
  auto run = [&](bool include_paraphrased) {
    TrainConfig tc = cfg.train;
    tc.detector.include_paraphrased = include_paraphrased;
    const auto state = run_training(tc, data, policy, detector);
    auto best = state.detector;
    best.set_params(state.best_detector);
    auto attacker = state.paraphraser;
    if (cfg.attack_with_best_paraphraser) attacker.set_params(state.best_paraphraser);
    auto r = measure_robustness(best, attacker, task.test, tc);
    r.best_validation_auroc = state.best_auroc.value_or(0.0);
    r.best_step = state.best_step;
    return r;
  };
  out.baseline = run(false);
  out.radar = run(true);
  return out;
}

nlohmann::json RobustnessResult::to_json() const {
  auto side = [](const DetectorRobustness& r) {
    return nlohmann::json{{"clean_auroc", r.clean_auroc},
                          {"attacked_auroc", r.attacked_auroc},
                          {"drop", r.drop()},
                          {"best_validation_auroc", r.best_validation_auroc},
                          {"best_step", r.best_step}};
  };
  return {{"seed", seed}, {"baseline", side(baseline)}, {"radar", side(radar)}, {"margin", margin()}};
}

}  // namespace radar::train
