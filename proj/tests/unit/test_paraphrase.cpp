#include <doctest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "radar/lm/rnn.hpp"
#include "radar/paraphrase/paraphrase.hpp"
#include "test_support.hpp"

using namespace radar;
using namespace radar::paraphrase;

namespace {

Vocabulary prompt_vocab(int words) {
  auto tokens = Vocabulary().tokens();
  for (const auto& t : prompt_tokens()) tokens.push_back(t);
  for (int i = 0; i < words; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary(tokens);
}

std::shared_ptr<lm::RnnLM> policy(std::uint64_t seed) {
  lm::RnnConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  cfg.init_scale = 0.5;
  cfg.seed = seed;
  return std::make_shared<lm::RnnLM>(prompt_vocab(8), cfg);
}

/// In-process paraphrase endpoint that reverses the word order.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(int failures_before_success = 0) : failures_(failures_before_success) {
    server_.Post("/v1/paraphrase", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        ++requests_;
        auth_ = req.get_header_value("Authorization");
        if (failures_ > 0) {
          --failures_;
          res.status = 503;
          return;
        }
      }
      const auto j = nlohmann::json::parse(req.body);
      auto words = tokenize(j.at("text").get<std::string>());
      std::reverse(words.begin(), words.end());
      res.set_content(nlohmann::json{{"id", j.at("id")}, {"text", detokenize(words)}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/paraphrase"; }
  int requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::string auth() const {
    std::lock_guard lock(mu_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  int failures_;
  int requests_ = 0;
  std::string auth_;
};

HttpClientConfig fast_client(const std::string& url) {
  HttpClientConfig cfg;
  cfg.endpoint = url;
  cfg.initial_backoff_ms = 1.0;
  cfg.timeout_s = 5.0;
  return cfg;
}

}  // namespace

TEST_SUITE("paraphrase") {
  TEST_CASE("format_prompt prepends the template and strips back") {
    const auto v = Vocabulary::build(std::vector<std::string>{"hello world"}, prompt_tokens());
    const auto x = v.encode("hello world");
    const auto p = format_prompt(v, x);
    CHECK(v.decode(p) == "Paraphrase: hello world");
    CHECK(strip_prompt(v, p) == x);
    CHECK_THROWS_AS(format_prompt(v, TokenSequence{}), Error);
    CHECK_THROWS_AS(strip_prompt(v, x), Error);
    CHECK_THROWS_AS(format_prompt(testing::word_vocab(2), TokenSequence{4}), Error);
  }

  TEST_CASE("instruction strings") {
    CHECK(instruction_for(TextRole::kAiText) ==
          "Enhance the word choices in the sentence to sound more like that of a human");
    CHECK(instruction_for(TextRole::kHumanText) ==
          "Worsen the word choices in the sentence to sound less like that of a human");
  }

  TEST_CASE("seen paraphraser with greedy sampling is repeatable") {
    const SeenParaphraser p(policy(1), 12);
    lm::SamplingConfig greedy;
    greedy.strategy = lm::SamplingStrategy::kGreedy;
    const TokenSequence x{6, 7, 8};
    const auto a = p.paraphrase(x, greedy);
    CHECK(a.tokens == p.paraphrase(x, greedy).tokens);
    CHECK(a.log_probs.has_value());
    CHECK(p.kind() == Kind::kSeen);
  }

  TEST_CASE("seen paraphrase log probs match rescoring on 1000 samples") {
    const auto pol = policy(2);
    const SeenParaphraser p(pol, 10);
    Rng rng(5);
    lm::SamplingConfig cfg;
    for (int i = 0; i < 1000; ++i) {
      TokenSequence x(1 + rng.below(6));
      for (auto& t : x) t = static_cast<TokenId>(6 + rng.below(8));
      cfg.seed = rng.next();
      const auto r = p.paraphrase(x, cfg);
      REQUIRE(r.log_probs.has_value());
      REQUIRE(r.tokens.size() <= 10);
      double sum = 0.0;
      for (double v : *r.log_probs) sum += v;
      const auto lp = lm::sequence_log_prob(*pol, r.tokens, format_prompt(pol->vocabulary(), x));
      REQUIRE(std::abs(sum - lp.total) <= 1e-9);
    }
  }

  TEST_CASE("mock synonym table gives a known output") {
    const auto v = Vocabulary::build(std::vector<std::string>{"the quick fox", "a fast dog"});
    auto svc = std::make_shared<MockParaphraseService>(
        std::map<std::string, std::string>{{"quick", "fast"}, {"fox", "dog"}}, false, 0);
    const ServiceParaphraser p(Kind::kMock, svc, v, 50);
    const auto out = p.paraphrase(v.encode("the quick fox"), {});
    CHECK(v.decode(out.tokens) == "the fast dog");
    CHECK_FALSE(out.log_probs.has_value());
    REQUIRE(svc->instructions_seen().size() == 1);
    CHECK(svc->instructions_seen()[0] == kAiTextInstruction);
    p.paraphrase(v.encode("a dog"), {}, TextRole::kHumanText);
    CHECK(svc->instructions_seen()[1] == kHumanTextInstruction);
  }

  TEST_CASE("mock rotation is deterministic and preserves the multiset") {
    MockParaphraseService svc({}, true, 3);
    const ParaphraseRequest req{"r1", std::string(kAiTextInstruction), "a b c d e"};
    const auto a = svc.call(req);
    CHECK(a.text == svc.call(req).text);
    auto wa = tokenize(a.text);
    std::sort(wa.begin(), wa.end());
    CHECK(wa == std::vector<std::string>{"a", "b", "c", "d", "e"});
    CHECK_THROWS_AS(svc.call({"r2", "do something", "a b"}), Error);
  }

  TEST_CASE("service output is capped at max_len") {
    const auto v = testing::word_vocab(5);
    const ServiceParaphraser p(Kind::kMock, MockParaphraseService::identity(), v, 2);
    CHECK(p.paraphrase(TokenSequence{4, 5, 6, 7}, {}).tokens.size() == 2);
  }

  TEST_CASE("multi-round paraphrasing") {
    const auto v = testing::word_vocab(5);
    const ServiceParaphraser identity(Kind::kMock, MockParaphraseService::identity(), v, 50);
    const TokenSequence x{4, 5, 6};
    const auto rounds = paraphrase_multi(identity, x, 3, {});
    REQUIRE(rounds.size() == 3);
    for (const auto& r : rounds) CHECK(r == x);
    CHECK_THROWS_AS(paraphrase_multi(identity, x, 0, {}), Error);

    const SeenParaphraser seen(policy(3), 8);
    lm::SamplingConfig cfg;
    cfg.seed = 12;
    const TokenSequence y{6, 7, 8};
    const auto one = paraphrase_multi(seen, y, 1, cfg);
    CHECK(one[0] == seen.paraphrase(y, cfg).text());
    const auto three = paraphrase_multi(seen, y, 3, cfg);
    CHECK(three == paraphrase_multi(seen, y, 3, cfg));
    CHECK(three[0] == one[0]);
  }

  TEST_CASE("paraphrase_batch preserves order and seeds") {
    const SeenParaphraser seen(policy(4), 8);
    const std::vector<TokenSequence> xs{{6, 7}, {8, 9, 10}, {11}};
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const auto out = seen.paraphrase_batch(xs, {}, seeds);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      lm::SamplingConfig c;
      c.seed = seeds[i];
      CHECK(out[i].tokens == seen.paraphrase(xs[i], c).tokens);
    }
    CHECK_THROWS_AS(seen.paraphrase_batch(xs, {}, std::vector<std::uint64_t>{1}), Error);
  }

  TEST_CASE("http client talks to an in-process endpoint") {
    FakeEndpoint ep;
    auto cfg = fast_client(ep.url());
    cfg.api_key = "secret";
    HttpParaphraseService svc(cfg);
    const auto r = svc.call({"abc", std::string(kAiTextInstruction), "one two three"});
    CHECK(r.text == "three two one");
    CHECK(r.id == "abc");
    CHECK(r.status == 200);
    CHECK(ep.auth() == "Bearer secret");
  }

  TEST_CASE("http client retries transient failures") {
    FakeEndpoint ep(2);
    HttpParaphraseService svc(fast_client(ep.url()));
    CHECK(svc.call({"x", std::string(kAiTextInstruction), "a b"}).text == "b a");
    CHECK(ep.requests() == 3);
  }

  TEST_CASE("http client gives up with the request id") {
    FakeEndpoint ep(10);
    auto cfg = fast_client(ep.url());
    cfg.max_attempts = 2;
    HttpParaphraseService svc(cfg);
    try {
      svc.call({"req-17", std::string(kAiTextInstruction), "a b"});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("req-17") != std::string::npos);
    }
    CHECK(ep.requests() == 2);
    CHECK_THROWS_AS(HttpParaphraseService(HttpClientConfig{}), Error);
  }

  TEST_CASE("concurrent service batches keep input order") {
    FakeEndpoint ep;
    const auto v = testing::word_vocab(6);
    const ServiceParaphraser p(Kind::kUnseen, std::make_shared<HttpParaphraseService>(fast_client(ep.url())), v, 50,
                               4);
    std::vector<TokenSequence> xs;
    for (int i = 0; i < 12; ++i) xs.push_back({static_cast<TokenId>(4 + i % 6), static_cast<TokenId>(4 + (i + 1) % 6)});
    const std::vector<std::uint64_t> seeds(xs.size(), 0);
    const auto out = p.paraphrase_batch(xs, {}, seeds);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(out[i].tokens == TokenSequence{xs[i][1], xs[i][0]});
  }
}
