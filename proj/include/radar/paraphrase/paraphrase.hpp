#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radar/core/vocabulary.hpp"
#include "radar/lm/language_model.hpp"
#include "radar/lm/sampling.hpp"

namespace radar::paraphrase {

inline constexpr std::string_view kPromptPrefix = "Paraphrase:";
inline constexpr std::string_view kAiTextInstruction =
    "Enhance the word choices in the sentence to sound more like that of a human";
inline constexpr std::string_view kHumanTextInstruction =
    "Worsen the word choices in the sentence to sound less like that of a human";

/// Tokens the prompt prefix tokenizes to; a vocabulary must contain them
/// for seen paraphrasing.
std::vector<std::string> prompt_tokens();

/// "Paraphrase: [s]" as tokens.
TokenSequence format_prompt(const Vocabulary& vocab, TokenSpan text);
/// Inverse of format_prompt; throws if the prefix is missing.
TokenSequence strip_prompt(const Vocabulary& vocab, TokenSpan prompt);

enum class Kind { kSeen, kUnseen, kMock };
std::string_view kind_name(Kind k);

/// Which instruction an instruction-following paraphraser receives.
enum class TextRole { kAiText, kHumanText };
std::string_view instruction_for(TextRole role);

struct ParaphraseResult {
  /// Generated tokens. Seen paraphrasers may end with end-of-sequence.
  TokenSequence tokens;
  /// Per-token log-probabilities under the policy; seen paraphrasers only.
  std::optional<std::vector<double>> log_probs;
  /// Tokens without a trailing end-of-sequence marker.
  TokenSequence text() const { return strip_eos(tokens); }
};

class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual Kind kind() const = 0;
  virtual std::string id() const = 0;
  virtual ParaphraseResult paraphrase(TokenSpan x, const lm::SamplingConfig& cfg,
                                      TextRole role = TextRole::kAiText) const = 0;
  /// Item i is paraphrased with seeds[i]; output order matches input order.
  virtual std::vector<ParaphraseResult> paraphrase_batch(std::span<const TokenSequence> xs,
                                                         const lm::SamplingConfig& cfg,
                                                         std::span<const std::uint64_t> seeds,
                                                         TextRole role = TextRole::kAiText) const;
};

/// Trainable paraphraser: samples from a language model after the
/// formatted prompt, at most `max_len` tokens.
class SeenParaphraser final : public Paraphraser {
 public:
  SeenParaphraser(std::shared_ptr<const lm::LanguageModel> policy, int max_len, std::string id = "seen");
  Kind kind() const override { return Kind::kSeen; }
  std::string id() const override { return id_; }
  ParaphraseResult paraphrase(TokenSpan x, const lm::SamplingConfig& cfg,
                              TextRole role = TextRole::kAiText) const override;

 private:
  std::shared_ptr<const lm::LanguageModel> policy_;
  int max_len_;
  std::string id_;
};

/// Sampling from `policy` after format_prompt(x); the shared body of seen
/// paraphrasing and of buffer filling during training.
ParaphraseResult seen_paraphrase(const lm::LanguageModel& policy, TokenSpan x, int max_len,
                                 const lm::SamplingConfig& cfg);

// ---- external (instruction-following) paraphrasers ----

struct ParaphraseRequest {
  std::string id;
  std::string instruction;
  std::string text;
};

struct ParaphraseResponse {
  std::string id;
  std::string text;
  double latency_ms = 0.0;
  int status = 0;
};

class ParaphraseService {
 public:
  virtual ~ParaphraseService() = default;
  /// Throws radar::Error (carrying the request id) on failure.
  virtual ParaphraseResponse call(const ParaphraseRequest& request) = 0;
};

/// Deterministic offline stand-in: word-level synonym substitution, then an
/// optional rotation of word order by a seed- and text-derived offset.
/// Rejects any instruction other than the two known ones.
class MockParaphraseService final : public ParaphraseService {
 public:
  MockParaphraseService(std::map<std::string, std::string> synonyms, bool rotate, std::uint64_t seed);
  static std::shared_ptr<MockParaphraseService> identity();

  ParaphraseResponse call(const ParaphraseRequest& request) override;
  std::vector<std::string> instructions_seen() const;

 private:
  std::map<std::string, std::string> synonyms_;
  bool rotate_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  std::vector<std::string> instructions_;
};

struct HttpClientConfig {
  /// e.g. "http://127.0.0.1:8080/paraphrase".
  std::string endpoint;
  std::string api_key;
  int max_attempts = 3;
  double initial_backoff_ms = 200.0;
  double backoff_multiplier = 2.0;
  int max_concurrency = 4;
  double timeout_s = 60.0;

  /// Endpoint and key from RADAR_UNSEEN_ENDPOINT / RADAR_UNSEEN_API_KEY.
  static HttpClientConfig from_env();
};

/// POST {"id", "instruction", "text"} -> {"text"} as JSON.
class HttpParaphraseService final : public ParaphraseService {
 public:
  explicit HttpParaphraseService(HttpClientConfig cfg);
  ParaphraseResponse call(const ParaphraseRequest& request) override;

 private:
  HttpClientConfig cfg_;
  std::string base_;
  std::string path_;
};

/// Paraphraser backed by a service (unseen or mock). Text crosses the
/// boundary as detokenized strings and is re-tokenized with `vocab`.
class ServiceParaphraser final : public Paraphraser {
 public:
  ServiceParaphraser(Kind kind, std::shared_ptr<ParaphraseService> service, Vocabulary vocab, int max_len,
                     int max_concurrency = 1, std::string id = "unseen");
  Kind kind() const override { return kind_; }
  std::string id() const override { return id_; }
  ParaphraseResult paraphrase(TokenSpan x, const lm::SamplingConfig& cfg,
                              TextRole role = TextRole::kAiText) const override;
  std::vector<ParaphraseResult> paraphrase_batch(std::span<const TokenSequence> xs, const lm::SamplingConfig& cfg,
                                                 std::span<const std::uint64_t> seeds,
                                                 TextRole role = TextRole::kAiText) const override;

 private:
  Kind kind_;
  std::shared_ptr<ParaphraseService> service_;
  Vocabulary vocab_;
  int max_len_;
  int max_concurrency_;
  std::string id_;
};

/// Applies the paraphraser `rounds` times, feeding each output back in.
/// Round 0 uses cfg.seed, so rounds = 1 matches a single paraphrase call.
std::vector<TokenSequence> paraphrase_multi(const Paraphraser& p, TokenSpan x, int rounds,
                                            const lm::SamplingConfig& cfg, TextRole role = TextRole::kAiText);

std::uint64_t round_seed(std::uint64_t seed, int round);

}  // namespace radar::paraphrase
