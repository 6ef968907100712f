#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radar/core/rng.hpp"
#include "radar/core/vocabulary.hpp"
#include "radar/lm/language_model.hpp"
#include "radar/lm/sampling.hpp"

namespace radar::corpus {

enum class Label { kHuman, kAiOriginal, kAiParaphrased };

std::string_view label_name(Label label);
Label parse_label(std::string_view name);
inline bool is_ai(Label label) { return label != Label::kHuman; }

struct LabeledExample {
  TokenSequence text;
  Label label = Label::kHuman;
  /// Dataset name and, for generated text, the generating model id.
  std::string source;
  std::string raw_text;
};

/// Aligned (human, original AI, paraphrased AI) example.
struct CorpusTriple {
  LabeledExample human;
  LabeledExample ai;
  std::optional<LabeledExample> paraphrased;
};

enum class CorpusFormat { kJsonl, kPlainText };

/// Raw record before tokenization.
struct Record {
  std::string text;
  Label label = Label::kHuman;
  std::string source;
};

/// JSONL: one {"text", "label"?, "source"?} object per line; blank lines are
/// skipped. Plain text: one human document per non-empty line.
std::vector<Record> read_records(const std::filesystem::path& path, CorpusFormat format);

/// Tokenizes every record with `vocab`; unknown tokens map to the unknown id.
std::vector<LabeledExample> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                        const Vocabulary& vocab);

/// JSONL with raw UTF-8 text; token ids are not persisted.
void write_corpus(const std::filesystem::path& path, std::span<const LabeledExample> examples);

LabeledExample make_example(const Vocabulary& vocab, std::string text, Label label, std::string source);
/// Example whose raw text is the detokenized form of `ids`.
LabeledExample example_from_ids(const Vocabulary& vocab, TokenSpan ids, Label label, std::string source);

struct CompletionConfig {
  int prompt_len = 30;
  int max_len = 200;
  lm::SamplingConfig sampling;
  std::uint64_t seed = 0;
};

struct AiCorpus {
  std::vector<CorpusTriple> triples;
  std::size_t skipped_short = 0;
  std::size_t skipped_failed = 0;
};

/// Completes the first `prompt_len` tokens of every eligible human text with
/// the target model. Generated texts are at most `max_len` tokens; a trailing
/// end-of-sequence token is not stored.
AiCorpus build_ai_corpus(std::span<const LabeledExample> human, const lm::LanguageModel& target,
                         const CompletionConfig& cfg, std::string_view target_id = "target");

struct SplitConfig {
  double train_fraction = 0.8;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Seeded shuffle, then the first floor(n * train_fraction) items go to
/// train and the next floor(n * validation_fraction) to validation.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> items, const SplitConfig& cfg);

struct TripleSplits {
  std::vector<CorpusTriple> train;
  std::vector<CorpusTriple> validation;
  std::vector<CorpusTriple> test;
};

/// One seeded shuffle; train and validation as in `split`, and every
/// remaining triple goes to test.
TripleSplits split_three_way(std::span<const CorpusTriple> triples, const SplitConfig& cfg);

/// Summary of a prepared corpus directory.
struct Manifest {
  struct Member {
    std::string file;
    std::string role;
    std::size_t count = 0;
  };
  std::vector<Member> members;
  std::vector<std::string> vocabulary;
  std::uint64_t vocabulary_checksum = 0;
  int prompt_len = 30;
  int max_len = 200;
  std::size_t skipped_short = 0;
  std::size_t skipped_failed = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

// ---- template implementation ----

std::vector<std::size_t> split_indices(std::size_t n, const SplitConfig& cfg, std::size_t& n_train,
                                       std::size_t& n_val);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> items, const SplitConfig& cfg) {
  std::size_t n_train = 0, n_val = 0;
  const auto order = split_indices(items.size(), cfg, n_train, n_val);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < n_train; ++i) out.first.push_back(items[order[i]]);
  for (std::size_t i = n_train; i < n_train + n_val; ++i) out.second.push_back(items[order[i]]);
  return out;
}

}  // namespace radar::corpus
