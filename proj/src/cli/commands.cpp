#include "radar/cli/commands.hpp"

#include <iostream>
#include <istream>
#include <ostream>

#include "radar/core/json_io.hpp"
#include "radar/lm/checkpoint.hpp"
#include "radar/paraphrase/paraphrase.hpp"

namespace radar::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSplits[] = {"train", "validation", "test"};

std::vector<std::string> texts_of(const std::vector<corpus::Record>& records) {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (r.label == corpus::Label::kHuman) out.push_back(r.text);
  return out;
}

std::vector<corpus::CorpusTriple> zip_triples(const std::vector<corpus::LabeledExample>& human,
                                              const std::vector<corpus::LabeledExample>& ai, const std::string& split) {
  if (human.size() != ai.size()) throw Error("prepared data: " + split + " human and AI files differ in length");
  std::vector<corpus::CorpusTriple> out;
  for (std::size_t i = 0; i < human.size(); ++i) out.push_back({human[i], ai[i], std::nullopt});
  return out;
}

std::shared_ptr<const detectors::SequenceClassifier> load_detector(const fs::path& path) {
  if (!fs::exists(path)) throw Error("detector checkpoint not found: " + path.string());
  return std::make_shared<const detectors::SequenceClassifier>(detectors::SequenceClassifier::load(path));
}

std::unique_ptr<paraphrase::Paraphraser> make_unseen(const RunConfig& cfg, const Vocabulary& vocab) {
  const auto& u = cfg.eval.unseen;
  const int max_len = cfg.train.paraphrase_max_len;
  if (u.kind == "mock") {
    auto service = std::make_shared<paraphrase::MockParaphraseService>(u.synonyms, u.rotate,
                                                                       DerivedSeeds::from(cfg.seed).eval);
    return std::make_unique<paraphrase::ServiceParaphraser>(paraphrase::Kind::kMock, service, vocab, max_len, 1,
                                                            "mock");
  }
  auto http = paraphrase::HttpClientConfig::from_env();
  if (!u.endpoint.empty()) http.endpoint = u.endpoint;
  if (http.endpoint.empty()) throw Error("unseen paraphraser: no endpoint (config, --unseen-endpoint or RADAR_UNSEEN_ENDPOINT)");
  http.max_attempts = u.max_attempts;
  http.max_concurrency = u.max_concurrency;
  http.timeout_s = u.timeout_s;
  auto service = std::make_shared<paraphrase::HttpParaphraseService>(http);
  return std::make_unique<paraphrase::ServiceParaphraser>(paraphrase::Kind::kUnseen, service, vocab, max_len,
                                                          u.max_concurrency, "unseen");
}

std::string dataset_name(const RunConfig& cfg) {
  return cfg.data.human_corpus ? cfg.data.human_corpus->stem().string() : std::string("synthetic");
}

}  // namespace

fs::path data_dir(const RunConfig& cfg) { return cfg.out_dir / "data"; }
fs::path checkpoint_dir(const RunConfig& cfg) { return cfg.out_dir / "checkpoints"; }
fs::path report_dir(const RunConfig& cfg) { return cfg.out_dir / "reports"; }

corpus::Manifest cmd_prepare(const RunConfig& cfg) {
  cfg.validate();
  const auto seeds = DerivedSeeds::from(cfg.seed);
  std::vector<std::string> human_texts, target_texts;
  if (cfg.data.human_corpus) {
    human_texts = texts_of(corpus::read_records(*cfg.data.human_corpus, cfg.data.human_format));
    target_texts = cfg.data.target_corpus
                       ? texts_of(corpus::read_records(*cfg.data.target_corpus, cfg.data.human_format))
                       : human_texts;
  } else {
    auto syn = cfg.data.synthetic;
    syn.seed = seeds.synthetic;
    auto texts = corpus::generate_synthetic(syn);
    human_texts = std::move(texts.human);
    target_texts = std::move(texts.target_train);
  }
  std::vector<std::string> all = human_texts;
  all.insert(all.end(), target_texts.begin(), target_texts.end());
  const auto vocab = Vocabulary::build(all, paraphrase::prompt_tokens());

  lm::NGramModel target(vocab, cfg.data.target);
  std::vector<TokenSequence> docs;
  for (const auto& t : target_texts) docs.push_back(vocab.encode(t));
  target.train(docs);

  const std::string source = dataset_name(cfg);
  std::vector<corpus::LabeledExample> human;
  for (const auto& t : human_texts) human.push_back(corpus::make_example(vocab, t, corpus::Label::kHuman, source));
  auto completion = cfg.data.completion;
  completion.seed = seeds.completion;
  const auto ai = corpus::build_ai_corpus(human, target, completion, "target");
  const auto splits = corpus::split_three_way(
      ai.triples, corpus::SplitConfig{cfg.data.train_fraction, cfg.data.validation_fraction, seeds.split});

  const fs::path dir = data_dir(cfg);
  corpus::Manifest manifest;
  const std::vector<corpus::CorpusTriple>* parts[] = {&splits.train, &splits.validation, &splits.test};
  for (int s = 0; s < 3; ++s) {
    std::vector<corpus::LabeledExample> h, a;
    for (const auto& t : *parts[s]) {
      h.push_back(t.human);
      a.push_back(t.ai);
    }
    const std::string split = kSplits[s];
    corpus::write_corpus(dir / (split + "_human.jsonl"), h);
    corpus::write_corpus(dir / (split + "_ai.jsonl"), a);
    manifest.members.push_back({split + "_human.jsonl", split + "/human", h.size()});
    manifest.members.push_back({split + "_ai.jsonl", split + "/ai_original", a.size()});
  }
  lm::save_lm(dir / "target_lm.json", target);
  manifest.members.push_back({"target_lm.json", "target_model", 1});
  manifest.vocabulary = vocab.tokens();
  manifest.vocabulary_checksum = vocab.checksum();
  manifest.prompt_len = completion.prompt_len;
  manifest.max_len = completion.max_len;
  manifest.skipped_short = ai.skipped_short;
  manifest.skipped_failed = ai.skipped_failed;
  manifest.seed = cfg.seed;
  write_json_file(dir / "manifest.json", manifest.to_json());
  return manifest;
}

PreparedData load_prepared(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw Error("no prepared data in " + dir.string() + " (run prepare first)");
  PreparedData d;
  d.manifest = corpus::Manifest::from_json(read_json_file(dir / "manifest.json"));
  d.vocab = Vocabulary(d.manifest.vocabulary);
  if (d.vocab.checksum() != d.manifest.vocabulary_checksum) throw Error("manifest: vocabulary checksum mismatch");
  std::vector<corpus::CorpusTriple>* parts[] = {&d.train, &d.validation, &d.test};
  for (int s = 0; s < 3; ++s) {
    const std::string split = kSplits[s];
    const auto h = corpus::load_corpus(dir / (split + "_human.jsonl"), corpus::CorpusFormat::kJsonl, d.vocab);
    const auto a = corpus::load_corpus(dir / (split + "_ai.jsonl"), corpus::CorpusFormat::kJsonl, d.vocab);
    *parts[s] = zip_triples(h, a, split);
  }
  return d;
}

fs::path cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const auto seeds = DerivedSeeds::from(cfg.seed);
  const auto data = load_prepared(data_dir(cfg));

  auto rnn = cfg.paraphraser;
  rnn.seed = seeds.paraphraser;
  lm::RnnLM policy(data.vocab, rnn);
  if (cfg.pretrain.epochs > 0) {
    std::vector<TokenSequence> texts;
    for (const auto& t : data.train) texts.push_back(t.ai.text);
    auto pre = cfg.pretrain;
    pre.seed = seeds.pretrain;
    const double nll = train::pretrain_paraphraser(policy, texts, pre);
    std::cerr << "pretrained paraphraser: nll/token " << nll << "\n";
  }
  auto dc = cfg.detector;
  dc.seed = seeds.detector;
  detectors::SequenceClassifier detector(data.vocab, dc);

  auto tc = cfg.train;
  tc.seed = seeds.train;
  const fs::path out = checkpoint_dir(cfg);
  train::TrainOptions options;
  options.diagnostics_path = out / "nonfinite_batch.json";
  options.on_step = [](const train::StepMetrics& m) {
    std::cerr << "step " << m.step << " L_D " << m.detector_loss << " L_G " << m.paraphraser_loss << " reward "
              << m.mean_reward << " val_auroc " << m.validation_auroc << "\n";
  };
  const auto state = train::run_training(tc, {data.train, data.validation}, policy, detector, options);
  train::write_training_outputs(out, tc, state);
  return out;
}

std::size_t cmd_detect(const fs::path& checkpoint, std::istream& in, std::ostream& out) {
  const auto clf = load_detector(checkpoint);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json id = n;
    std::string text = line;
    if (line.front() == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error("detect: malformed JSON on input line " + std::to_string(n + 1) + ": " + e.what());
      }
      if (!j.contains("text") || !j["text"].is_string())
        throw Error("detect: input line " + std::to_string(n + 1) + " lacks a text field");
      text = j["text"].get<std::string>();
      if (j.contains("id")) id = j["id"];
    }
    const auto ids = clf->vocabulary().encode(text);
    out << nlohmann::json{{"id", id}, {"ai_score", detectors::score_supervised(*clf, ids)}}.dump() << "\n";
    ++n;
  }
  return n;
}

eval::EvalReport cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  cfg.validate();
  const auto seeds = DerivedSeeds::from(cfg.seed);
  const auto data = load_prepared(data_dir(cfg));
  const fs::path ckpt = checkpoint.value_or(checkpoint_dir(cfg) / "best_detector.json");

  std::shared_ptr<const lm::LanguageModel> target = lm::load_lm(data_dir(cfg) / "target_lm.json");
  std::vector<std::shared_ptr<const detectors::Detector>> owned;
  for (const auto& name : cfg.eval.detectors) {
    if (name == "radar") {
      const auto clf = load_detector(ckpt);
      owned.push_back(std::make_shared<eval::RetokenizingDetector>(detectors::make_supervised_detector(clf, "radar"),
                                                                   data.vocab, clf->vocabulary()));
      continue;
    }
    const auto m = detectors::parse_method(name);
    if (m == detectors::Method::kDetectGpt) {
      owned.push_back(detectors::make_detect_gpt_detector(target, target, cfg.eval.detect_gpt));
    } else if (m == detectors::Method::kSupervised) {
      throw Error("eval: use \"radar\" for the supervised detector");
    } else {
      owned.push_back(detectors::make_lm_detector(m, target));
    }
  }
  std::vector<const detectors::Detector*> dets;
  for (const auto& d : owned) dets.push_back(d.get());

  std::unique_ptr<paraphrase::Paraphraser> seen, unseen;
  for (const auto& s : cfg.eval.schemas) {
    if (s.kind == eval::SchemaKind::kSeen && !seen) {
      std::shared_ptr<const lm::LanguageModel> policy = lm::load_rnn(ckpt.parent_path() / "best_paraphraser.json");
      seen = std::make_unique<paraphrase::SeenParaphraser>(policy, cfg.train.paraphrase_max_len, "seen");
    }
    if (s.kind == eval::SchemaKind::kUnseen && !unseen) unseen = make_unseen(cfg, data.vocab);
  }

  const std::string dataset = dataset_name(cfg);
  eval::EvalReport report;
  for (const auto& s : cfg.eval.schemas) {
    const paraphrase::Paraphraser* p = s.kind == eval::SchemaKind::kSeen     ? seen.get()
                                       : s.kind == eval::SchemaKind::kUnseen ? unseen.get()
                                                                             : nullptr;
    report.append(eval::run_schema(dets, data.test, s, p, cfg.train.sampling, seeds.eval, dataset));
  }

  const fs::path dir = report_dir(cfg);
  write_json_file(dir / "report.json", report.to_json());
  write_text_file(dir / "report.csv", report.to_csv());
  write_text_file(dir / "scores.jsonl", report.scores_jsonl());
  write_text_file(dir / "plots" / "auroc_vs_rounds.csv", eval::rounds_plot_csv(report));

  const auto clean = eval::schema_examples(data.test, {}, nullptr, cfg.train.sampling, seeds.eval, dataset);
  std::string buckets = "method,bucket,min_length,max_length,count,auroc\n";
  for (const auto* d : dets) {
    const auto b = eval::length_buckets(*d, clean, cfg.eval.length_buckets, seeds.eval);
    const auto csv = eval::length_plot_csv(b);
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
      const std::size_t end = csv.find('\n', pos);
      buckets += d->name() + "," + csv.substr(pos, end - pos + 1);
      pos = end + 1;
    }
  }
  write_text_file(dir / "plots" / "auroc_vs_length_bucket.csv", buckets);
  return report;
}

eval::TransferMatrix cmd_transfer(const RunConfig& cfg) {
  cfg.validate();
  const auto& models = cfg.transfer.models;
  if (models.empty()) throw Error("transfer: no models configured");
  const auto seeds = DerivedSeeds::from(cfg.seed);
  std::vector<std::shared_ptr<const detectors::Detector>> dets;
  std::vector<Vocabulary> det_vocab;
  std::vector<PreparedData> data;
  for (const auto& m : models) {
    const auto clf = load_detector(m.checkpoint);
    det_vocab.push_back(clf->vocabulary());
    dets.push_back(detectors::make_supervised_detector(clf, m.model));
    data.push_back(load_prepared(m.data_dir));
  }
  const std::size_t n = models.size();
  std::vector<std::vector<double>> grid(n, std::vector<double>(n));
  std::vector<std::string> names;
  for (std::size_t b = 0; b < n; ++b) {
    names.push_back(models[b].model);
    std::unique_ptr<paraphrase::Paraphraser> p;
    if (cfg.transfer.schema.kind == eval::SchemaKind::kUnseen) p = make_unseen(cfg, data[b].vocab);
    const auto examples =
        eval::schema_examples(data[b].test, cfg.transfer.schema, p.get(), cfg.train.sampling, seeds.eval, models[b].model);
    for (std::size_t a = 0; a < n; ++a) {
      const eval::RetokenizingDetector d(dets[a], data[b].vocab, det_vocab[a]);
      const detectors::Detector* one[] = {&d};
      const auto r = eval::score_examples(one, examples, models[b].model, cfg.transfer.schema.name(), seeds.eval);
      if (!r.results.front().auroc) throw Error("transfer: corpus of " + models[b].model + " lacks a class");
      grid[a][b] = *r.results.front().auroc;
    }
  }
  auto matrix = eval::transfer_from_auroc(std::move(names), std::move(grid));
  const fs::path dir = report_dir(cfg);
  write_json_file(dir / "transfer.json", matrix.to_json());
  write_text_file(dir / "transfer.csv", matrix.to_csv());
  return matrix;
}

eval::EnsembleSweep cmd_ensemble(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.ensemble.base || !cfg.ensemble.augmented) throw Error("ensemble: base and augmented checkpoints are required");
  const auto seeds = DerivedSeeds::from(cfg.seed);
  const auto data = load_prepared(data_dir(cfg));
  auto wrap = [&](const fs::path& path, const std::string& name) -> std::shared_ptr<const detectors::Detector> {
    const auto clf = load_detector(path);
    return std::make_shared<eval::RetokenizingDetector>(detectors::make_supervised_detector(clf, name), data.vocab,
                                                        clf->vocabulary());
  };
  const auto base = wrap(*cfg.ensemble.base, "base");
  const auto augmented = wrap(*cfg.ensemble.augmented, "augmented");
  std::unique_ptr<paraphrase::Paraphraser> p;
  if (cfg.ensemble.schema.kind == eval::SchemaKind::kUnseen) p = make_unseen(cfg, data.vocab);
  if (cfg.ensemble.schema.kind == eval::SchemaKind::kSeen) {
    std::shared_ptr<const lm::LanguageModel> policy = lm::load_rnn(checkpoint_dir(cfg) / "best_paraphraser.json");
    p = std::make_unique<paraphrase::SeenParaphraser>(policy, cfg.train.paraphrase_max_len, "seen");
  }
  const auto examples =
      eval::schema_examples(data.test, cfg.ensemble.schema, p.get(), cfg.train.sampling, seeds.eval, dataset_name(cfg));
  auto sweep = eval::ensemble_sweep(base, augmented, cfg.ensemble.betas, examples, seeds.eval);
  sweep.base = cfg.ensemble.base->string();
  sweep.augmented = cfg.ensemble.augmented->string();
  const fs::path dir = report_dir(cfg);
  write_json_file(dir / "ensemble.json", sweep.to_json());
  write_text_file(dir / "ensemble.csv", sweep.to_csv());
  return sweep;
}

}  // namespace radar::cli
