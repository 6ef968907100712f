#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "radar/lm/checkpoint.hpp"
#include "radar/lm/ngram.hpp"
#include "radar/lm/rnn.hpp"
#include "radar/lm/sampling.hpp"
#include "test_support.hpp"

using namespace radar;
using namespace radar::lm;

namespace {

const Vocabulary& ab_vocab() {
  static const Vocabulary v = Vocabulary::build(std::vector<std::string>{"a b"});
  return v;
}

NGramModel ab_bigram(double smoothing) {
  NGramModel m(ab_vocab(), {2, smoothing});
  const std::vector<TokenSequence> docs{ab_vocab().encode("a b a b")};
  m.train(docs);
  return m;
}

RnnLM small_rnn(std::uint64_t seed = 1) {
  RnnConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 5;
  cfg.init_scale = 0.5;
  cfg.seed = seed;
  return RnnLM(testing::word_vocab(6), cfg);
}

TokenSequence random_context(Rng& rng, std::size_t vocab_size) {
  TokenSequence ctx(rng.below(8));
  for (auto& t : ctx) t = static_cast<TokenId>(Vocabulary::kNumReserved + rng.below(vocab_size - Vocabulary::kNumReserved));
  return ctx;
}

void check_distribution(const std::vector<double>& p) {
  double total = 0.0;
  for (double v : p) {
    REQUIRE(v >= 0.0);
    total += v;
  }
  REQUIRE(std::abs(total - 1.0) <= 1e-9);
}

class Scalar final : public Parametric {
 public:
  explicit Scalar(double w) {
    params_.add("w", 1, 1);
    params_.values()[0] = w;
  }
  double w() const { return params_.values()[0]; }
};

}  // namespace

TEST_SUITE("lm") {
  TEST_CASE("uniform model gives 1/C everywhere") {
    const auto v = testing::word_vocab(6);
    UniformLM u(v);
    const auto d = next_token_distribution(u, TokenSequence{4, 5});
    for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 10.0).epsilon(1e-15));
    const auto lp = sequence_log_prob(u, TokenSequence{4, 5, 6});
    CHECK(lp.total == doctest::Approx(-3.0 * std::log(10.0)).epsilon(1e-12));
  }

  TEST_CASE("bigram on 'a b a b' predicts b after a with zero smoothing") {
    const auto m = ab_bigram(0.0);
    const auto a = ab_vocab().id("a");
    const auto b = ab_vocab().id("b");
    const auto d = next_token_distribution(m, TokenSequence{a});
    CHECK(d.probs[static_cast<std::size_t>(b)] == 1.0);
    CHECK(next_token_distribution(m, TokenSequence{a}).probs == d.probs);
  }

  TEST_CASE("bigram sequence log prob matches hand counts") {
    // bigrams of <bos> a b a b <eos>: bos->a 1, a->b 2, b->a 1, b->eos 1; add-one over 4 predictable tokens
    const auto m = ab_bigram(1.0);
    const auto x = ab_vocab().encode("a b b a");
    const auto lp = sequence_log_prob(m, x);
    const double expected = std::log(2.0 / 5.0) + std::log(3.0 / 6.0) + std::log(1.0 / 6.0) + std::log(2.0 / 6.0);
    CHECK(lp.total == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::accumulate(lp.per_token.begin(), lp.per_token.end(), 0.0) == doctest::Approx(lp.total).epsilon(1e-12));
    CHECK_FALSE(lp.zero_prob_index.has_value());
  }

  TEST_CASE("zero probability token reports -inf and its index") {
    const auto m = ab_bigram(0.0);
    const auto x = ab_vocab().encode("a a b");
    const auto lp = sequence_log_prob(m, x);
    CHECK(std::isinf(lp.total));
    CHECK(lp.total < 0);
    REQUIRE(lp.zero_prob_index.has_value());
    CHECK(*lp.zero_prob_index == 1);
  }

  TEST_CASE("deterministic model gives total log prob 0") {
    const auto v = testing::word_vocab(4);
    const TokenSequence x{4, 6, 5, 7};
    const auto m = testing::realized_sequence_lm(v, x);
    CHECK(sequence_log_prob(m, x).total == 0.0);
  }

  TEST_CASE("out of vocabulary context is rejected") {
    const auto m = ab_bigram(1.0);
    CHECK_THROWS_AS(next_token_distribution(m, TokenSequence{99}), Error);
    CHECK_THROWS_AS(sequence_log_prob(m, TokenSequence{}), Error);
  }

  TEST_CASE("distributions are valid on 1000 random contexts") {
    const auto v = testing::word_vocab(6);
    NGramModel ngram(v, {3, 0.5});
    Rng rng(11);
    std::vector<TokenSequence> docs;
    for (int i = 0; i < 20; ++i) docs.push_back(random_context(rng, v.size()));
    ngram.train(docs);
    const auto rnn = small_rnn();
    const UniformLM uniform(v);
    for (int i = 0; i < 1000; ++i) {
      const auto ctx = random_context(rng, v.size());
      check_distribution(next_token_distribution(ngram, ctx).probs);
      check_distribution(next_token_distribution(rnn, ctx).probs);
      check_distribution(next_token_distribution(uniform, ctx).probs);
    }
  }

  TEST_CASE("chain rule holds for autoregressive backends") {
    const auto v = testing::word_vocab(6);
    NGramModel ngram(v, {2, 1.0});
    Rng rng(4);
    std::vector<TokenSequence> docs;
    for (int i = 0; i < 10; ++i) docs.push_back(random_context(rng, v.size()));
    ngram.train(docs);
    const auto rnn = small_rnn();
    for (const LanguageModel* m : {static_cast<const LanguageModel*>(&ngram), static_cast<const LanguageModel*>(&rnn)}) {
      for (int i = 0; i < 20; ++i) {
        auto a = random_context(rng, v.size());
        auto b = random_context(rng, v.size());
        a.push_back(4);
        b.push_back(5);
        TokenSequence ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        const double whole = sequence_log_prob(*m, ab).total;
        const double parts = sequence_log_prob(*m, a).total + sequence_log_prob(*m, b, a).total;
        CHECK(std::abs(whole - parts) <= 1e-9);
      }
    }
  }

  TEST_CASE("nucleus collapses to the top token") {
    const std::vector<double> p{0.97, 0.02, 0.01};
    CHECK(candidate_set(p, 50, 0.95) == std::vector<TokenId>{0});
    CHECK(candidate_set(p, 2, 1.0) == std::vector<TokenId>{0, 1});
  }

  TEST_CASE("sampler support stays inside the nucleus when k is not binding") {
    const auto v = testing::word_vocab(10);
    std::vector<double> probs(v.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < 10; ++i) total += probs[Vocabulary::kNumReserved + i] = std::pow(0.6, static_cast<double>(i));
    for (double& p : probs) p /= total;
    // Oracle nucleus: smallest descending prefix whose mass reaches 0.95.
    std::set<TokenId> nucleus;
    double mass = 0.0;
    for (std::size_t i = 0; i < 10 && mass < 0.95; ++i) {
      mass += probs[Vocabulary::kNumReserved + i];
      nucleus.insert(static_cast<TokenId>(Vocabulary::kNumReserved + i));
    }
    REQUIRE(nucleus.size() < 10);
    const auto analytic = candidate_set(probs, 50, 0.95);
    CHECK(std::set<TokenId>(analytic.begin(), analytic.end()) == nucleus);
    SamplingConfig cfg;
    Rng rng(2024);
    std::set<TokenId> support;
    for (int i = 0; i < 10000; ++i) support.insert(sample_token(probs, cfg, rng));
    for (TokenId t : support) CHECK(nucleus.count(t) == 1);
    CHECK(support.size() >= 2);
  }

  TEST_CASE("top-1 sampling equals greedy decoding") {
    const auto rnn = small_rnn(3);
    SamplingConfig top1;
    top1.k = 1;
    top1.seed = 77;
    SamplingConfig greedy;
    greedy.strategy = SamplingStrategy::kGreedy;
    const TokenSequence prompt{4, 5};
    CHECK(sample_completion(rnn, prompt, 12, top1) == sample_completion(rnn, prompt, 12, greedy));
  }

  TEST_CASE("sampling is seed deterministic and keeps the prefix") {
    const auto rnn = small_rnn(3);
    SamplingConfig cfg;
    cfg.seed = 5;
    const TokenSequence prompt{4, 5, 6};
    const auto a = sample_completion(rnn, prompt, 10, cfg);
    CHECK(a == sample_completion(rnn, prompt, 10, cfg));
    CHECK(std::equal(prompt.begin(), prompt.end(), a.begin()));
    CHECK(a.size() <= prompt.size() + 10);
    for (std::size_t i = prompt.size(); i + 1 < a.size(); ++i) CHECK(a[i] != Vocabulary::kEos);
  }

  TEST_CASE("generation log probs match rescoring") {
    const auto rnn = small_rnn(9);
    SamplingConfig cfg;
    cfg.seed = 3;
    const TokenSequence prompt{4, 7};
    const auto g = generate(rnn, prompt, 15, cfg);
    const auto lp = sequence_log_prob(rnn, g.tokens, prompt);
    for (std::size_t i = 0; i < g.tokens.size(); ++i) CHECK(std::abs(g.log_probs[i] - lp.per_token[i]) <= 1e-12);
  }

  TEST_CASE("temperature sharpens and preserves order") {
    const std::vector<double> p{0.5, 0.3, 0.2};
    const auto t = apply_temperature(p, 0.5);
    CHECK(t[0] > p[0]);
    CHECK(t[0] > t[1]);
    CHECK(t[1] > t[2]);
    CHECK(std::accumulate(t.begin(), t.end(), 0.0) == doctest::Approx(1.0));
  }

  TEST_CASE("sampling config validation and json") {
    SamplingConfig cfg;
    CHECK(cfg.k == 50);
    CHECK(cfg.p == 0.95);
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK_THROWS_AS(SamplingConfig::from_json({{"bogus", 1}}), Error);
    const auto back = SamplingConfig::from_json({{"strategy", "greedy"}, {"p", 0.5}});
    CHECK(back.strategy == SamplingStrategy::kGreedy);
    CHECK(back.p == 0.5);
    CHECK(back.k == 50);
  }

  TEST_CASE("rnn gradient matches finite differences") {
    auto rnn = small_rnn(5);
    const TokenSequence prompt{4, 5};
    const TokenSequence target{6, 7, 8, Vocabulary::kEos};
    const auto trace = rnn.forward(prompt, target);
    auto grad = rnn.parameters().zeros_like();
    const std::vector<double> minus_one(target.size(), -1.0);
    rnn.backward(trace, minus_one, grad);
    const auto nll = [&](const std::vector<double>& p) {
      rnn.set_params(p);
      return -rnn.forward(prompt, target).total_log_prob();
    };
    CHECK(testing::max_fd_error(rnn.get_params(), grad, nll, 40, 1) <= 1e-4);
  }

  TEST_CASE("rnn forward agrees with incremental decoding") {
    const auto rnn = small_rnn(6);
    const TokenSequence prompt{4, 5};
    const TokenSequence target{6, 7, 8};
    const auto trace = rnn.forward(prompt, target);
    const auto lp = sequence_log_prob(rnn, target, prompt);
    CHECK(std::abs(trace.total_log_prob() - lp.total) <= 1e-12);
  }

  TEST_CASE("set_params of get_params is bit identical") {
    auto rnn = small_rnn(2);
    const TokenSequence ctx{4, 6};
    const auto before = next_token_distribution(rnn, ctx).probs;
    rnn.set_params(rnn.get_params());
    CHECK(next_token_distribution(rnn, ctx).probs == before);
    CHECK_THROWS_AS(rnn.set_params(std::vector<double>(3, 0.0)), Error);
  }

  TEST_CASE("zero gradient step leaves parameters unchanged") {
    auto rnn = small_rnn(2);
    const auto before = rnn.get_params();
    SgdOptimizer sgd(0.1);
    rnn.update_params(rnn.parameters().zeros_like(), sgd);
    CHECK(rnn.get_params() == before);
  }

  TEST_CASE("frozen models reject updates") {
    auto rnn = small_rnn(2);
    rnn.set_frozen(true);
    SgdOptimizer sgd(0.1);
    try {
      rnn.update_params(rnn.parameters().zeros_like(), sgd);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()) == "frozen model");
    }
  }

  TEST_CASE("one descent step reduces a quadratic") {
    Scalar s(1.0);
    const auto f = [](double w) { return (w - 3.0) * (w - 3.0); };
    const double before = f(s.w());
    SgdOptimizer sgd(0.1);
    const std::vector<double> g{2.0 * (s.w() - 3.0)};
    s.update_params(g, sgd);
    CHECK(f(s.w()) < before);
  }

  TEST_CASE("checkpoints round trip for both backends") {
    testing::TempDir dir("lm");
    const auto ngram = ab_bigram(1.0);
    const auto rnn = small_rnn(8);
    save_lm(dir.path() / "ngram.json", ngram);
    save_lm(dir.path() / "rnn.json", rnn);
    const auto ngram2 = load_lm(dir.path() / "ngram.json");
    const auto rnn2 = load_rnn(dir.path() / "rnn.json");
    CHECK(ngram2->kind() == "ngram");
    const TokenSequence ab{4, 5};
    CHECK(next_token_distribution(*ngram2, ab).probs == next_token_distribution(ngram, ab).probs);
    const TokenSequence ctx{4, 9};
    CHECK(next_token_distribution(*rnn2, ctx).probs == next_token_distribution(rnn, ctx).probs);
    CHECK_THROWS_AS(load_rnn(dir.path() / "ngram.json"), Error);
  }
}
