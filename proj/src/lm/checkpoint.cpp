#include "radar/lm/checkpoint.hpp"

#include "radar/core/json_io.hpp"

namespace radar::lm {
namespace {

void check_header(const nlohmann::json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointFormatVersion) {
    throw Error("unsupported checkpoint format_version " + std::to_string(version));
  }
}

}  // namespace

nlohmann::json lm_to_json(const LanguageModel& lm) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["kind"] = lm.kind();
  j["vocabulary"] = lm.vocabulary().tokens();
  if (const auto* ng = dynamic_cast<const NGramModel*>(&lm)) {
    j["hyperparameters"] = {{"order", ng->config().order}, {"smoothing", ng->config().smoothing}};
    j["counts"] = ng->counts_to_json();
  } else if (const auto* rnn = dynamic_cast<const RnnLM*>(&lm)) {
    const auto& c = rnn->config();
    j["hyperparameters"] = {{"embed_dim", c.embed_dim},
                            {"hidden_dim", c.hidden_dim},
                            {"init_scale", c.init_scale},
                            {"seed", c.seed}};
    j["frozen"] = rnn->frozen();
    j["parameters"] = rnn->parameters().to_json();
  } else if (dynamic_cast<const UniformLM*>(&lm)) {
    j["hyperparameters"] = nlohmann::json::object();
  } else {
    throw Error("cannot serialize language model of kind '" + lm.kind() + "'");
  }
  return j;
}

std::unique_ptr<LanguageModel> lm_from_json(const nlohmann::json& j) {
  check_header(j);
  Vocabulary vocab(j.at("vocabulary").get<std::vector<std::string>>());
  const auto kind = j.at("kind").get<std::string>();
  const auto& hp = j.at("hyperparameters");
  if (kind == "ngram") {
    NGramConfig cfg{hp.at("order").get<int>(), hp.at("smoothing").get<double>()};
    auto model = std::make_unique<NGramModel>(std::move(vocab), cfg);
    model->counts_from_json(j.at("counts"));
    return model;
  }
  if (kind == "rnn") {
    RnnConfig cfg{hp.at("embed_dim").get<int>(), hp.at("hidden_dim").get<int>(), hp.at("init_scale").get<double>(),
                  hp.at("seed").get<std::uint64_t>()};
    auto model = std::make_unique<RnnLM>(std::move(vocab), cfg);
    const auto params = ParameterSet::from_json(j.at("parameters"));
    model->set_params(params.values());
    model->set_frozen(j.value("frozen", false));
    return model;
  }
  if (kind == "uniform") return std::make_unique<UniformLM>(std::move(vocab));
  throw Error("unknown language model kind '" + kind + "'");
}

void save_lm(const std::filesystem::path& path, const LanguageModel& lm) { write_json_file(path, lm_to_json(lm)); }

std::unique_ptr<LanguageModel> load_lm(const std::filesystem::path& path) { return lm_from_json(read_json_file(path)); }

std::unique_ptr<RnnLM> load_rnn(const std::filesystem::path& path) {
  auto lm = load_lm(path);
  auto* raw = dynamic_cast<RnnLM*>(lm.get());
  if (!raw) throw Error(path.string() + " does not hold a recurrent language model");
  lm.release();
  return std::unique_ptr<RnnLM>(raw);
}

}  // namespace radar::lm
