#include "radar/paraphrase/paraphrase.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "radar/core/rng.hpp"

namespace radar::paraphrase {

std::vector<std::string> prompt_tokens() { return tokenize(kPromptPrefix); }

TokenSequence format_prompt(const Vocabulary& vocab, TokenSpan text) {
  if (text.empty()) throw Error("format_prompt: empty text");
  TokenSequence out;
  for (const auto& t : prompt_tokens()) {
    const auto id = vocab.find(t);
    if (!id) throw Error("vocabulary lacks prompt token '" + t + "'");
    out.push_back(*id);
  }
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

TokenSequence strip_prompt(const Vocabulary& vocab, TokenSpan prompt) {
  const auto prefix = prompt_tokens();
  if (prompt.size() < prefix.size()) throw Error("strip_prompt: missing prefix");
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (vocab.find(prefix[i]) != prompt[i]) throw Error("strip_prompt: missing prefix");
  }
  return TokenSequence(prompt.begin() + static_cast<std::ptrdiff_t>(prefix.size()), prompt.end());
}

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::kSeen:
      return "seen";
    case Kind::kUnseen:
      return "unseen";
    case Kind::kMock:
      return "mock";
  }
  return "seen";
}

std::string_view instruction_for(TextRole role) {
  return role == TextRole::kAiText ? kAiTextInstruction : kHumanTextInstruction;
}

std::vector<ParaphraseResult> Paraphraser::paraphrase_batch(std::span<const TokenSequence> xs,
                                                            const lm::SamplingConfig& cfg,
                                                            std::span<const std::uint64_t> seeds,
                                                            TextRole role) const {
  if (seeds.size() != xs.size()) throw Error("paraphrase_batch: one seed per text required");
  std::vector<ParaphraseResult> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto c = cfg;
    c.seed = seeds[i];
    out.push_back(paraphrase(xs[i], c, role));
  }
  return out;
}

ParaphraseResult seen_paraphrase(const lm::LanguageModel& policy, TokenSpan x, int max_len,
                                 const lm::SamplingConfig& cfg) {
  const auto prompt = format_prompt(policy.vocabulary(), x);
  auto gen = lm::generate(policy, prompt, max_len, cfg);
  return {std::move(gen.tokens), std::move(gen.log_probs)};
}

SeenParaphraser::SeenParaphraser(std::shared_ptr<const lm::LanguageModel> policy, int max_len, std::string id)
    : policy_(std::move(policy)), max_len_(max_len), id_(std::move(id)) {
  if (max_len_ < 1) throw Error("paraphraser max_len must be >= 1");
}

ParaphraseResult SeenParaphraser::paraphrase(TokenSpan x, const lm::SamplingConfig& cfg, TextRole) const {
  return seen_paraphrase(*policy_, x, max_len_, cfg);
}

MockParaphraseService::MockParaphraseService(std::map<std::string, std::string> synonyms, bool rotate,
                                             std::uint64_t seed)
    : synonyms_(std::move(synonyms)), rotate_(rotate), seed_(seed) {}

std::shared_ptr<MockParaphraseService> MockParaphraseService::identity() {
  return std::make_shared<MockParaphraseService>(std::map<std::string, std::string>{}, false, 0);
}

ParaphraseResponse MockParaphraseService::call(const ParaphraseRequest& request) {
  if (request.instruction != kAiTextInstruction && request.instruction != kHumanTextInstruction) {
    throw Error("mock paraphraser: unexpected instruction for request " + request.id);
  }
  if (request.text.empty()) throw Error("mock paraphraser: empty text for request " + request.id);
  {
    std::lock_guard lock(mu_);
    instructions_.push_back(request.instruction);
  }
  auto words = tokenize(request.text);
  for (auto& w : words) {
    if (auto it = synonyms_.find(w); it != synonyms_.end()) w = it->second;
  }
  if (rotate_ && words.size() > 1) {
    const auto offset = mix_seed(seed_, fnv1a(request.text)) % words.size();
    std::rotate(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(offset), words.end());
  }
  return {request.id, detokenize(words), 0.0, 200};
}

std::vector<std::string> MockParaphraseService::instructions_seen() const {
  std::lock_guard lock(mu_);
  return instructions_;
}

HttpClientConfig HttpClientConfig::from_env() {
  HttpClientConfig cfg;
  if (const char* e = std::getenv("RADAR_UNSEEN_ENDPOINT")) cfg.endpoint = e;
  if (const char* k = std::getenv("RADAR_UNSEEN_API_KEY")) cfg.api_key = k;
  return cfg;
}

ServiceParaphraser::ServiceParaphraser(Kind kind, std::shared_ptr<ParaphraseService> service, Vocabulary vocab,
                                       int max_len, int max_concurrency, std::string id)
    : kind_(kind),
      service_(std::move(service)),
      vocab_(std::move(vocab)),
      max_len_(max_len),
      max_concurrency_(std::max(1, max_concurrency)),
      id_(std::move(id)) {
  if (kind_ == Kind::kSeen) throw Error("service paraphrasers cannot be of kind seen");
  if (max_len_ < 1) throw Error("paraphraser max_len must be >= 1");
}

ParaphraseResult ServiceParaphraser::paraphrase(TokenSpan x, const lm::SamplingConfig& cfg, TextRole role) const {
  if (x.empty()) throw Error("paraphrase: empty text");
  ParaphraseRequest req;
  req.text = vocab_.decode(x);
  req.instruction = std::string(instruction_for(role));
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(mix_seed(cfg.seed, fnv1a(req.text))));
  req.id = id;
  const auto resp = service_->call(req);
  if (resp.text.empty()) throw Error("paraphraser returned empty text for request " + req.id);
  ParaphraseResult out;
  out.tokens = vocab_.encode(resp.text);
  if (out.tokens.size() > static_cast<std::size_t>(max_len_)) out.tokens.resize(static_cast<std::size_t>(max_len_));
  return out;
}

std::vector<ParaphraseResult> ServiceParaphraser::paraphrase_batch(std::span<const TokenSequence> xs,
                                                                   const lm::SamplingConfig& cfg,
                                                                   std::span<const std::uint64_t> seeds,
                                                                   TextRole role) const {
  if (seeds.size() != xs.size()) throw Error("paraphrase_batch: one seed per text required");
  if (max_concurrency_ <= 1 || xs.size() <= 1) return Paraphraser::paraphrase_batch(xs, cfg, seeds, role);
  std::vector<ParaphraseResult> out(xs.size());
  std::vector<std::exception_ptr> errors(xs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < xs.size(); i = next++) {
      try {
        auto c = cfg;
        c.seed = seeds[i];
        out[i] = paraphrase(xs[i], c, role);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(max_concurrency_), xs.size());
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::uint64_t round_seed(std::uint64_t seed, int round) {
  return round == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(round));
}

std::vector<TokenSequence> paraphrase_multi(const Paraphraser& p, TokenSpan x, int rounds,
                                            const lm::SamplingConfig& cfg, TextRole role) {
  if (rounds < 1) throw Error("paraphrase_multi: rounds must be >= 1");
  std::vector<TokenSequence> out;
  TokenSequence current(x.begin(), x.end());
  for (int r = 0; r < rounds; ++r) {
    // An empty paraphrase has nothing left to rewrite, so it stays empty.
    if (!current.empty()) {
      auto c = cfg;
      c.seed = round_seed(cfg.seed, r);
      current = p.paraphrase(current, c, role).text();
    }
    out.push_back(current);
  }
  return out;
}

}  // namespace radar::paraphrase
