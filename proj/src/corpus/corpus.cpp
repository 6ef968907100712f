#include "radar/corpus/corpus.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "radar/core/json_io.hpp"

namespace radar::corpus {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::kHuman:
      return "human";
    case Label::kAiOriginal:
      return "ai_original";
    case Label::kAiParaphrased:
      return "ai_paraphrased";
  }
  return "human";
}

Label parse_label(std::string_view name) {
  if (name == "human") return Label::kHuman;
  if (name == "ai_original") return Label::kAiOriginal;
  if (name == "ai_paraphrased") return Label::kAiParaphrased;
  throw Error("unknown label '" + std::string(name) + "'");
}

std::vector<Record> read_records(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (format == CorpusFormat::kPlainText) {
      if (line.back() == '\r') line.pop_back();
      out.push_back({line, Label::kHuman, path.stem().string()});
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        throw Error("record lacks a string 'text' field");
      }
      Record r;
      r.text = j["text"].get<std::string>();
      r.label = j.contains("label") ? parse_label(j["label"].get<std::string>()) : Label::kHuman;
      r.source = j.value("source", std::string());
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
  }
  if (out.empty()) throw Error("empty corpus: " + path.string());
  return out;
}

LabeledExample make_example(const Vocabulary& vocab, std::string text, Label label, std::string source) {
  LabeledExample ex;
  ex.text = vocab.encode(text);
  ex.label = label;
  ex.source = std::move(source);
  ex.raw_text = std::move(text);
  return ex;
}

LabeledExample example_from_ids(const Vocabulary& vocab, TokenSpan ids, Label label, std::string source) {
  LabeledExample ex;
  ex.text.assign(ids.begin(), ids.end());
  ex.label = label;
  ex.source = std::move(source);
  ex.raw_text = vocab.decode(ids);
  return ex;
}

std::vector<LabeledExample> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                        const Vocabulary& vocab) {
  std::vector<LabeledExample> out;
  for (auto& r : read_records(path, format)) {
    out.push_back(make_example(vocab, std::move(r.text), r.label, std::move(r.source)));
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const LabeledExample> examples) {
  std::string text;
  for (const auto& ex : examples) {
    nlohmann::json j = {{"text", ex.raw_text}, {"label", label_name(ex.label)}, {"source", ex.source}};
    text += j.dump();
    text += '\n';
  }
  write_text_file(path, text);
}

AiCorpus build_ai_corpus(std::span<const LabeledExample> human, const lm::LanguageModel& target,
                         const CompletionConfig& cfg, std::string_view target_id) {
  if (cfg.prompt_len < 1) throw Error("build_ai_corpus: prompt_len must be >= 1");
  if (cfg.max_len <= cfg.prompt_len) throw Error("build_ai_corpus: max_len must exceed prompt_len");
  const auto& vocab = target.vocabulary();
  AiCorpus out;
  for (std::size_t i = 0; i < human.size(); ++i) {
    const auto& h = human[i];
    if (h.text.size() < static_cast<std::size_t>(cfg.prompt_len)) {
      ++out.skipped_short;
      continue;
    }
    try {
      auto sampling = cfg.sampling;
      sampling.seed = mix_seed(cfg.seed, i);
      const TokenSpan prefix(h.text.data(), static_cast<std::size_t>(cfg.prompt_len));
      auto ids = strip_eos(lm::sample_completion(target, prefix, cfg.max_len - cfg.prompt_len, sampling));
      std::string source = h.source.empty() ? std::string(target_id) : h.source + "|" + std::string(target_id);
      out.triples.push_back({h, example_from_ids(vocab, ids, Label::kAiOriginal, std::move(source)), std::nullopt});
    } catch (const std::exception& e) {
      ++out.skipped_failed;
      std::cerr << "warning: completion failed for sample " << i << ": " << e.what() << "\n";
    }
  }
  if (out.triples.empty()) throw Error("build_ai_corpus: every sample was skipped");
  return out;
}

void SplitConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0) || !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error("split fractions must lie in (0, 1)");
  }
  if (train_fraction + validation_fraction > 1.0 + 1e-12) throw Error("split fractions sum to more than 1");
}

std::vector<std::size_t> split_indices(std::size_t n, const SplitConfig& cfg, std::size_t& n_train,
                                       std::size_t& n_val) {
  cfg.validate();
  n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.train_fraction + 1e-9));
  n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.validation_fraction + 1e-9));
  n_val = std::min(n_val, n - std::min(n, n_train));
  if (n_train == 0 || n_val == 0) throw Error("split produces an empty partition");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& m : members) files.push_back({{"file", m.file}, {"role", m.role}, {"count", m.count}});
  char checksum[17];
  std::snprintf(checksum, sizeof checksum, "%016llx", static_cast<unsigned long long>(vocabulary_checksum));
  return {{"version", 1},
          {"members", files},
          {"vocabulary", vocabulary},
          {"vocabulary_checksum", checksum},
          {"prompt_len", prompt_len},
          {"max_len", max_len},
          {"skipped_short", skipped_short},
          {"skipped_failed", skipped_failed},
          {"seed", seed}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  for (const auto& f : j.at("members")) {
    m.members.push_back({f.at("file").get<std::string>(), f.at("role").get<std::string>(), f.at("count").get<std::size_t>()});
  }
  m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  m.vocabulary_checksum = std::stoull(j.at("vocabulary_checksum").get<std::string>(), nullptr, 16);
  m.prompt_len = j.at("prompt_len").get<int>();
  m.max_len = j.at("max_len").get<int>();
  m.skipped_short = j.value("skipped_short", std::size_t{0});
  m.skipped_failed = j.value("skipped_failed", std::size_t{0});
  m.seed = j.value("seed", std::uint64_t{0});
  if (Vocabulary(m.vocabulary).checksum() != m.vocabulary_checksum) throw Error("manifest vocabulary checksum mismatch");
  return m;
}

TripleSplits split_three_way(std::span<const CorpusTriple> triples, const SplitConfig& cfg) {
  std::size_t n_train = 0, n_val = 0;
  const auto order = split_indices(triples.size(), cfg, n_train, n_val);
  if (n_train + n_val == triples.size()) throw Error("split: empty test partition");
  TripleSplits out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_train ? out.train : (i < n_train + n_val ? out.validation : out.test);
    dst.push_back(triples[order[i]]);
  }
  return out;
}

}  // namespace radar::corpus
