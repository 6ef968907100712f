#include "radar/cli/config.hpp"

#include "radar/core/json_io.hpp"

namespace radar::cli {

namespace {

using nlohmann::json;

json opt_path(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(); }

std::optional<std::filesystem::path> read_opt_path(const json& j, const char* key,
                                                   const std::optional<std::filesystem::path>& fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return std::nullopt;
  return std::filesystem::path(j[key].get<std::string>());
}

std::string_view format_name(corpus::CorpusFormat f) { return f == corpus::CorpusFormat::kJsonl ? "jsonl" : "text"; }

corpus::CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return corpus::CorpusFormat::kJsonl;
  if (s == "text") return corpus::CorpusFormat::kPlainText;
  throw Error("config: unknown corpus format '" + s + "'");
}

json rnn_json(const lm::RnnConfig& c) {
  return {{"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim}, {"init_scale", c.init_scale}};
}

lm::RnnConfig rnn_from(const json& j, lm::RnnConfig c) {
  require_known_keys(j, {"embed_dim", "hidden_dim", "init_scale"}, "paraphraser");
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.init_scale = j.value("init_scale", c.init_scale);
  return c;
}

json classifier_json(const detectors::ClassifierConfig& c) {
  return {{"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim}, {"init_scale", c.init_scale}};
}

detectors::ClassifierConfig classifier_from(const json& j, detectors::ClassifierConfig c) {
  require_known_keys(j, {"embed_dim", "hidden_dim", "init_scale"}, "detector");
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.init_scale = j.value("init_scale", c.init_scale);
  return c;
}

}  // namespace

DerivedSeeds DerivedSeeds::from(std::uint64_t seed) {
  return {mix_seed(seed, 1), mix_seed(seed, 2), mix_seed(seed, 3), mix_seed(seed, 4),
          mix_seed(seed, 5), mix_seed(seed, 6), mix_seed(seed, 7), mix_seed(seed, 8)};
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.eval.schemas = {{eval::SchemaKind::kNoParaphrase, 1, false},
                    {eval::SchemaKind::kSeen, 1, false},
                    {eval::SchemaKind::kUnseen, 1, false}};
  c.eval.detectors = {"radar", "log_p", "rank", "log_rank", "entropy", "detect_gpt"};
  c.ensemble.betas = {0.0, 0.25, 0.5, 0.75, 1.0};
  return c;
}

void RunConfig::validate() const {
  if (version != kConfigVersion) throw Error("config: unsupported version " + std::to_string(version));
  train.validate();
  data.completion.sampling.validate();
  if (data.train_fraction <= 0.0 || data.validation_fraction <= 0.0 ||
      data.train_fraction + data.validation_fraction >= 1.0)
    throw Error("config: train and validation fractions must be positive and leave a test split");
  for (const auto& s : eval.schemas) s.validate();
  eval.detect_gpt.validate();
  if (eval.unseen.kind != "mock" && eval.unseen.kind != "http")
    throw Error("config: unseen paraphraser kind must be mock or http");
  for (const auto& d : eval.detectors)
    if (d != "radar") detectors::parse_method(d);
  if (transfer.schema.kind == eval::SchemaKind::kSeen) throw Error("config: transfer does not support seen paraphrasing");
  for (double b : ensemble.betas)
    if (!(b >= 0.0 && b <= 1.0)) throw Error("config: ensemble betas must lie in [0, 1]");
}

json RunConfig::to_json() const {
  json schemas = json::array();
  for (const auto& s : eval.schemas) schemas.push_back(s.to_json());
  json transfer_models = json::array();
  for (const auto& t : transfer.models)
    transfer_models.push_back({{"model", t.model}, {"checkpoint", t.checkpoint.string()}, {"data_dir", t.data_dir.string()}});
  return {
      {"version", version},
      {"seed", seed},
      {"out_dir", out_dir.string()},
      {"data",
       {{"human_corpus", opt_path(data.human_corpus)},
        {"human_format", format_name(data.human_format)},
        {"target_corpus", opt_path(data.target_corpus)},
        {"synthetic", [&] {
           auto s = data.synthetic.to_json();
           s.erase("seed");
           return s;
         }()},
        {"target", {{"order", data.target.order}, {"smoothing", data.target.smoothing}}},
        {"completion",
         {{"prompt_len", data.completion.prompt_len},
          {"max_len", data.completion.max_len},
          {"sampling", data.completion.sampling.to_json()}}},
        {"train_fraction", data.train_fraction},
        {"validation_fraction", data.validation_fraction}}},
      {"models",
       {{"paraphraser", rnn_json(paraphraser)},
        {"pretrain", {{"epochs", pretrain.epochs}, {"batch_size", pretrain.batch_size}, {"lr", pretrain.lr}}},
        {"detector", classifier_json(detector)}}},
      {"train", [&] {
         auto t = train.to_json();
         t.erase("seed");
         return t;
       }()},
      {"eval",
       {{"schemas", schemas},
        {"detectors", eval.detectors},
        {"detect_gpt",
         {{"perturbations", eval.detect_gpt.perturbations},
          {"mask_fraction", eval.detect_gpt.mask_fraction},
          {"sigma_floor", eval.detect_gpt.sigma_floor}}},
        {"unseen",
         {{"kind", eval.unseen.kind},
          {"synonyms", eval.unseen.synonyms},
          {"rotate", eval.unseen.rotate},
          {"endpoint", eval.unseen.endpoint},
          {"max_attempts", eval.unseen.max_attempts},
          {"max_concurrency", eval.unseen.max_concurrency},
          {"timeout_s", eval.unseen.timeout_s}}},
        {"length_buckets", eval.length_buckets}}},
      {"transfer", {{"models", transfer_models}, {"schema", transfer.schema.to_json()}}},
      {"ensemble",
       {{"base", opt_path(ensemble.base)},
        {"augmented", opt_path(ensemble.augmented)},
        {"betas", ensemble.betas},
        {"schema", ensemble.schema.to_json()}}},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  require_known_keys(j, {"version", "seed", "out_dir", "data", "models", "train", "eval", "transfer", "ensemble"},
                     "config");
  RunConfig c = defaults();
  if (!j.contains("version")) throw Error("config: missing version");
  c.version = j["version"].get<int>();
  if (c.version != kConfigVersion) throw Error("config: unsupported version " + std::to_string(c.version));
  c.seed = j.value("seed", c.seed);
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("data")) {
    const auto& d = j["data"];
    require_known_keys(d,
                       {"human_corpus", "human_format", "target_corpus", "synthetic", "target", "completion",
                        "train_fraction", "validation_fraction"},
                       "data");
    c.data.human_corpus = read_opt_path(d, "human_corpus", c.data.human_corpus);
    if (d.contains("human_format")) c.data.human_format = parse_format(d["human_format"].get<std::string>());
    c.data.target_corpus = read_opt_path(d, "target_corpus", c.data.target_corpus);
    if (d.contains("synthetic")) {
      if (d["synthetic"].contains("seed")) throw Error("data.synthetic: the seed derives from the run seed");
      c.data.synthetic = corpus::SyntheticConfig::from_json(d["synthetic"], c.data.synthetic);
    }
    if (d.contains("target")) {
      const auto& t = d["target"];
      require_known_keys(t, {"order", "smoothing"}, "data.target");
      c.data.target.order = t.value("order", c.data.target.order);
      c.data.target.smoothing = t.value("smoothing", c.data.target.smoothing);
    }
    if (d.contains("completion")) {
      const auto& t = d["completion"];
      require_known_keys(t, {"prompt_len", "max_len", "sampling"}, "data.completion");
      c.data.completion.prompt_len = t.value("prompt_len", c.data.completion.prompt_len);
      c.data.completion.max_len = t.value("max_len", c.data.completion.max_len);
      if (t.contains("sampling"))
        c.data.completion.sampling = lm::SamplingConfig::from_json(t["sampling"], c.data.completion.sampling);
    }
    c.data.train_fraction = d.value("train_fraction", c.data.train_fraction);
    c.data.validation_fraction = d.value("validation_fraction", c.data.validation_fraction);
  }
  if (j.contains("models")) {
    const auto& m = j["models"];
    require_known_keys(m, {"paraphraser", "pretrain", "detector"}, "models");
    if (m.contains("paraphraser")) c.paraphraser = rnn_from(m["paraphraser"], c.paraphraser);
    if (m.contains("detector")) c.detector = classifier_from(m["detector"], c.detector);
    if (m.contains("pretrain")) {
      const auto& p = m["pretrain"];
      require_known_keys(p, {"epochs", "batch_size", "lr"}, "models.pretrain");
      c.pretrain.epochs = p.value("epochs", c.pretrain.epochs);
      c.pretrain.batch_size = p.value("batch_size", c.pretrain.batch_size);
      c.pretrain.lr = p.value("lr", c.pretrain.lr);
    }
  }
  if (j.contains("train")) {
    if (j["train"].contains("seed")) throw Error("train: the seed derives from the run seed");
    c.train = train::TrainConfig::from_json(j["train"], c.train);
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    require_known_keys(e, {"schemas", "detectors", "detect_gpt", "unseen", "length_buckets"}, "eval");
    if (e.contains("schemas")) {
      c.eval.schemas.clear();
      for (const auto& s : e["schemas"]) c.eval.schemas.push_back(eval::EvalSchema::from_json(s));
    }
    if (e.contains("detectors")) c.eval.detectors = e["detectors"].get<std::vector<std::string>>();
    if (e.contains("detect_gpt")) {
      const auto& g = e["detect_gpt"];
      require_known_keys(g, {"perturbations", "mask_fraction", "sigma_floor"}, "eval.detect_gpt");
      c.eval.detect_gpt.perturbations = g.value("perturbations", c.eval.detect_gpt.perturbations);
      c.eval.detect_gpt.mask_fraction = g.value("mask_fraction", c.eval.detect_gpt.mask_fraction);
      c.eval.detect_gpt.sigma_floor = g.value("sigma_floor", c.eval.detect_gpt.sigma_floor);
    }
    if (e.contains("unseen")) {
      const auto& u = e["unseen"];
      require_known_keys(u, {"kind", "synonyms", "rotate", "endpoint", "max_attempts", "max_concurrency", "timeout_s"},
                         "eval.unseen");
      c.eval.unseen.kind = u.value("kind", c.eval.unseen.kind);
      if (u.contains("synonyms")) c.eval.unseen.synonyms = u["synonyms"].get<std::map<std::string, std::string>>();
      c.eval.unseen.rotate = u.value("rotate", c.eval.unseen.rotate);
      c.eval.unseen.endpoint = u.value("endpoint", c.eval.unseen.endpoint);
      c.eval.unseen.max_attempts = u.value("max_attempts", c.eval.unseen.max_attempts);
      c.eval.unseen.max_concurrency = u.value("max_concurrency", c.eval.unseen.max_concurrency);
      c.eval.unseen.timeout_s = u.value("timeout_s", c.eval.unseen.timeout_s);
    }
    c.eval.length_buckets = e.value("length_buckets", c.eval.length_buckets);
  }
  if (j.contains("transfer")) {
    const auto& t = j["transfer"];
    require_known_keys(t, {"models", "schema"}, "transfer");
    c.transfer.models.clear();
    for (const auto& m : t.value("models", json::array())) {
      require_known_keys(m, {"model", "checkpoint", "data_dir"}, "transfer.models");
      c.transfer.models.push_back({m.at("model").get<std::string>(), m.at("checkpoint").get<std::string>(),
                            m.at("data_dir").get<std::string>()});
    }
    if (t.contains("schema")) c.transfer.schema = eval::EvalSchema::from_json(t["schema"]);
  }
  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    require_known_keys(e, {"base", "augmented", "betas", "schema"}, "ensemble");
    c.ensemble.base = read_opt_path(e, "base", c.ensemble.base);
    c.ensemble.augmented = read_opt_path(e, "augmented", c.ensemble.augmented);
    if (e.contains("betas")) c.ensemble.betas = e["betas"].get<std::vector<double>>();
    if (e.contains("schema")) c.ensemble.schema = eval::EvalSchema::from_json(e["schema"]);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
}

}  // namespace radar::cli
