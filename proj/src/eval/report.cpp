#include "radar/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "radar/core/json_io.hpp"
#include "radar/eval/auroc.hpp"

namespace radar::eval {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view schema_kind_name(SchemaKind k) {
  switch (k) {
    case SchemaKind::kNoParaphrase: return "no_paraphrase";
    case SchemaKind::kSeen: return "seen";
    case SchemaKind::kUnseen: return "unseen";
  }
  throw Error("unknown schema kind");
}

SchemaKind parse_schema_kind(std::string_view name) {
  if (name == "no_paraphrase") return SchemaKind::kNoParaphrase;
  if (name == "seen") return SchemaKind::kSeen;
  if (name == "unseen") return SchemaKind::kUnseen;
  throw Error("unknown schema kind '" + std::string(name) + "'");
}

void EvalSchema::validate() const {
  if (rounds < 1) throw Error("schema: rounds must be >= 1");
  if (kind == SchemaKind::kNoParaphrase && (rounds > 1 || paraphrase_humans))
    throw Error("schema: rounds > 1 and human paraphrasing need a paraphraser");
}

std::string EvalSchema::name() const {
  std::string n(schema_kind_name(kind));
  if (rounds > 1) n += "_r" + std::to_string(rounds);
  if (paraphrase_humans) n += "_humans";
  return n;
}

nlohmann::json EvalSchema::to_json() const {
  return {{"kind", schema_kind_name(kind)}, {"rounds", rounds}, {"paraphrase_humans", paraphrase_humans}};
}

EvalSchema EvalSchema::from_json(const nlohmann::json& j) {
  require_known_keys(j, {"kind", "rounds", "paraphrase_humans"}, "schema");
  EvalSchema s;
  s.kind = parse_schema_kind(j.value("kind", std::string("no_paraphrase")));
  s.rounds = j.value("rounds", 1);
  s.paraphrase_humans = j.value("paraphrase_humans", false);
  s.validate();
  return s;
}

nlohmann::json ScoreRecord::to_json() const {
  return {{"id", id}, {"method", method}, {"raw_value", raw_value}, {"ai_score", ai_score},
          {"label", label_name(label)}};
}

ScoreSummary ScoreSummary::of(std::span<const double> values) {
  ScoreSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  s.min = values[0];
  s.max = values[0];
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

nlohmann::json ScoreSummary::to_json() const {
  return {{"count", count}, {"mean", mean}, {"stddev", stddev}, {"min", min}, {"max", max}};
}

std::optional<double> MethodResult::auroc_from_scores() const {
  std::vector<ScoredLabel> s;
  bool ai = false, human = false;
  for (const auto& r : scores) {
    s.push_back({r.ai_score, corpus::is_ai(r.label)});
    (corpus::is_ai(r.label) ? ai : human) = true;
  }
  if (!ai || !human) return std::nullopt;
  return eval::auroc(s);
}

const MethodResult& EvalReport::find(std::string_view dataset, std::string_view schema, std::string_view method) const {
  for (const auto& r : results)
    if (r.dataset == dataset && r.schema == schema && r.method == method) return r;
  throw Error("report has no result for " + std::string(dataset) + "/" + std::string(schema) + "/" +
              std::string(method));
}

void EvalReport::append(const EvalReport& other) {
  results.insert(results.end(), other.results.begin(), other.results.end());
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& r : results) {
    out[r.dataset][r.schema][r.method] = {{"auroc", r.auroc ? nlohmann::json(*r.auroc) : nlohmann::json()},
                                          {"n_ai", r.n_ai},
                                          {"n_human", r.n_human},
                                          {"skipped", r.skipped},
                                          {"ai_scores", r.ai_scores.to_json()},
                                          {"human_scores", r.human_scores.to_json()}};
  }
  return out;
}

std::string EvalReport::to_csv() const {
  std::string out = "dataset,schema,method,auroc,n_ai,n_human,skipped\n";
  for (const auto& r : results) {
    out += r.dataset + "," + r.schema + "," + r.method + "," + (r.auroc ? fmt(*r.auroc) : std::string()) + "," +
           std::to_string(r.n_ai) + "," + std::to_string(r.n_human) + "," + std::to_string(r.skipped) + "\n";
  }
  return out;
}

std::string EvalReport::scores_jsonl() const {
  std::string out;
  for (const auto& r : results)
    for (const auto& s : r.scores) out += s.to_json().dump() + "\n";
  return out;
}

std::vector<EvalExample> schema_examples(std::span<const corpus::CorpusTriple> triples, const EvalSchema& schema,
                                         const paraphrase::Paraphraser* paraphraser, const lm::SamplingConfig& sampling,
                                         std::uint64_t seed, std::string_view dataset) {
  schema.validate();
  if (schema.kind != SchemaKind::kNoParaphrase && paraphraser == nullptr)
    throw Error("schema " + schema.name() + " needs a paraphraser");
  const std::string ds(dataset);
  std::vector<EvalExample> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    out.push_back({ds + "/" + std::to_string(i) + "/human", 2 * i, triples[i].human.text, corpus::Label::kHuman});
  }
  if (schema.kind == SchemaKind::kNoParaphrase) {
    for (std::size_t i = 0; i < triples.size(); ++i)
      out.push_back({ds + "/" + std::to_string(i) + "/ai", 2 * i + 1, triples[i].ai.text, corpus::Label::kAiOriginal});
    return out;
  }
  const auto role = schema.paraphrase_humans ? paraphrase::TextRole::kHumanText : paraphrase::TextRole::kAiText;
  const std::string suffix = schema.paraphrase_humans ? "/paraphrased_human" : "/paraphrased";
  std::vector<TokenSequence> current;
  for (const auto& t : triples) current.push_back(schema.paraphrase_humans ? t.human.text : t.ai.text);
  for (int r = 0; r < schema.rounds; ++r) {
    std::vector<std::size_t> live;
    std::vector<TokenSequence> inputs;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      if (current[i].empty()) continue;
      live.push_back(i);
      inputs.push_back(current[i]);
      seeds.push_back(paraphrase::round_seed(mix_seed(seed, i), r));
    }
    const auto results = paraphraser->paraphrase_batch(inputs, sampling, seeds, role);
    for (std::size_t j = 0; j < results.size(); ++j) current[live[j]] = results[j].text();
  }
  for (std::size_t i = 0; i < triples.size(); ++i)
    out.push_back({ds + "/" + std::to_string(i) + suffix, 2 * i + 1, std::move(current[i]), corpus::Label::kAiParaphrased});
  return out;
}

EvalReport score_examples(std::span<const detectors::Detector* const> detectors, std::span<const EvalExample> examples,
                          std::string_view dataset, std::string_view schema, std::uint64_t seed) {
  EvalReport report;
  for (const auto* d : detectors) {
    MethodResult m;
    m.dataset = dataset;
    m.schema = schema;
    m.method = d->name();
    std::vector<double> ai, human;
    for (const auto& ex : examples) {
      detectors::DetectionScore s;
      try {
        s = d->score(ex.tokens, mix_seed(seed, ex.seed_key));
      } catch (const Error&) {
        ++m.skipped;
        continue;
      }
      m.scores.push_back({ex.id, m.method, s.raw_value, s.ai_score, ex.label});
      (corpus::is_ai(ex.label) ? ai : human).push_back(s.ai_score);
    }
    m.n_ai = ai.size();
    m.n_human = human.size();
    m.ai_scores = ScoreSummary::of(ai);
    m.human_scores = ScoreSummary::of(human);
    if (!ai.empty() && !human.empty()) m.auroc = auroc(ai, human);
    report.results.push_back(std::move(m));
  }
  return report;
}

EvalReport run_schema(std::span<const detectors::Detector* const> detectors,
                      std::span<const corpus::CorpusTriple> triples, const EvalSchema& schema,
                      const paraphrase::Paraphraser* paraphraser, const lm::SamplingConfig& sampling,
                      std::uint64_t seed, std::string_view dataset) {
  const auto examples = schema_examples(triples, schema, paraphraser, sampling, seed, dataset);
  return score_examples(detectors, examples, dataset, schema.name(), seed);
}

std::string rounds_plot_csv(const EvalReport& report) {
  // Rounds are parsed back from schema names: "<kind>[_r<n>][_humans]".
  struct Key {
    std::string dataset, kind, method;
    bool humans;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::map<int, double>> rows;
  for (const auto& r : report.results) {
    if (!r.auroc) continue;
    std::string name = r.schema;
    bool humans = false;
    if (name.size() > 7 && name.ends_with("_humans")) {
      humans = true;
      name.resize(name.size() - 7);
    }
    int rounds = 1;
    if (const auto pos = name.rfind("_r"); pos != std::string::npos && pos + 2 < name.size() &&
                                            std::all_of(name.begin() + pos + 2, name.end(), ::isdigit)) {
      rounds = std::stoi(name.substr(pos + 2));
      name.resize(pos);
    }
    if (name == "no_paraphrase") rounds = 0;
    if (name == "no_paraphrase") {
      rows[{r.dataset, "seen", r.method, false}][0] = *r.auroc;
      rows[{r.dataset, "unseen", r.method, false}][0] = *r.auroc;
      continue;
    }
    rows[{r.dataset, name, r.method, humans}][rounds] = *r.auroc;
  }
  std::string out = "dataset,paraphraser,text,method,rounds,auroc\n";
  for (const auto& [k, by_round] : rows) {
    if (by_round.size() == 1 && by_round.begin()->first == 0) continue;
    for (const auto& [rounds, a] : by_round) {
      out += k.dataset + "," + k.kind + "," + (k.humans ? "human" : "ai") + "," + k.method + "," +
             std::to_string(rounds) + "," + fmt(a) + "\n";
    }
  }
  return out;
}

}  // namespace radar::eval
