#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radar/detectors/classifier.hpp"
#include "radar/eval/auroc.hpp"
#include "radar/eval/report.hpp"
#include "radar/eval/studies.hpp"
#include "radar/lm/rnn.hpp"
#include "radar/paraphrase/paraphrase.hpp"
#include "test_support.hpp"

using namespace radar;
using namespace radar::eval;
using corpus::CorpusTriple;
using corpus::Label;

namespace {

Vocabulary eval_vocab() {
  auto tokens = Vocabulary().tokens();
  for (const auto& t : paraphrase::prompt_tokens()) tokens.push_back(t);
  for (int i = 0; i < 6; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary(tokens);
}

/// Human texts use w0..w2 and AI texts use w3..w5, with varying lengths.
std::vector<CorpusTriple> separable_triples(const Vocabulary& v, int n) {
  std::vector<CorpusTriple> out;
  for (int i = 0; i < n; ++i) {
    std::string h, a;
    for (int j = 0; j < 2 + i % 5; ++j) {
      h += "w" + std::to_string(j % 3) + " ";
      a += "w" + std::to_string(3 + (i + j) % 3) + " ";
    }
    out.push_back({corpus::make_example(v, h, Label::kHuman, "t"), corpus::make_example(v, a, Label::kAiOriginal, "t"),
                   std::nullopt});
  }
  return out;
}

/// Linear detector scoring w3..w5 as AI and w0..w2 as human.
std::shared_ptr<detectors::SequenceClassifier> separating_classifier(const Vocabulary& v, double strength = 1.0) {
  detectors::ClassifierConfig cc;
  cc.embed_dim = 1;
  cc.hidden_dim = 0;
  auto clf = std::make_shared<detectors::SequenceClassifier>(v, cc);
  auto p = clf->get_params();
  std::fill(p.begin(), p.end(), 0.0);
  const auto& blocks = clf->parameters().blocks();
  for (int i = 0; i < 6; ++i) p[blocks[0].offset + *v.find("w" + std::to_string(i))] = i < 3 ? strength : -strength;
  p[blocks[1].offset] = -1.0;
  p[blocks[1].offset + 1] = 1.0;
  clf->set_params(p);
  return clf;
}

std::shared_ptr<detectors::SequenceClassifier> random_classifier(const Vocabulary& v, std::uint64_t seed) {
  detectors::ClassifierConfig cc;
  cc.embed_dim = 4;
  cc.hidden_dim = 3;
  cc.init_scale = 1.0;
  cc.seed = seed;
  return std::make_shared<detectors::SequenceClassifier>(v, cc);
}

std::vector<double> random_scores(Rng& rng, std::size_t n, int levels) {
  std::vector<double> s(n);
  for (auto& v : s) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) / levels;
  return s;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("auroc examples") {
    CHECK(auroc(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}) == 1.0);
    CHECK(auroc(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5, 0.5}) == 0.5);
    CHECK(auroc(std::vector<double>{0.9, 0.4}, std::vector<double>{0.5, 0.1}) == 0.75);
    CHECK(auroc_pairwise(std::vector<double>{0.9, 0.4}, std::vector<double>{0.5, 0.1}) == 0.75);
    const std::vector<ScoredLabel> labelled{{0.9, true}, {0.4, true}, {0.5, false}, {0.1, false}};
    CHECK(auroc(labelled) == 0.75);
  }

  TEST_CASE("auroc rejects degenerate input") {
    CHECK_THROWS_WITH_AS(auroc(std::vector<double>{0.1}, std::vector<double>{}), "degenerate labels", Error);
    const std::vector<ScoredLabel> one_class{{0.1, true}, {0.2, true}};
    CHECK_THROWS_AS(auroc(one_class), Error);
    CHECK_THROWS_AS(auroc(std::vector<double>{std::nan("")}, std::vector<double>{0.1}), Error);
  }

  TEST_CASE("rank auroc equals pair counting with ties") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
      const auto ai = random_scores(rng, 1 + rng.below(30), 7);
      const auto human = random_scores(rng, 1 + rng.below(30), 7);
      CHECK(std::abs(auroc(ai, human) - auroc_pairwise(ai, human)) <= 1e-12);
    }
  }

  TEST_CASE("auroc is invariant under increasing maps") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      auto ai = random_scores(rng, 10, 100);
      auto human = random_scores(rng, 12, 100);
      const double base = auroc(ai, human);
      const double a = 0.5 + rng.uniform(), b = rng.uniform();
      auto f = [&](double x) { return std::exp(a * x) + b * x * x * x; };
      std::transform(ai.begin(), ai.end(), ai.begin(), f);
      std::transform(human.begin(), human.end(), human.begin(), f);
      CHECK(auroc(ai, human) == base);
    }
  }

  TEST_CASE("flipping labels complements auroc on tie-free input") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      std::vector<double> ai(8), human(9);
      for (auto& v : ai) v = rng.uniform();
      for (auto& v : human) v = rng.uniform();
      CHECK(auroc(human, ai) == doctest::Approx(1.0 - auroc(ai, human)).epsilon(1e-15));
    }
  }

  TEST_CASE("schema names") {
    CHECK(EvalSchema{SchemaKind::kNoParaphrase, 1, false}.name() == "no_paraphrase");
    CHECK(EvalSchema{SchemaKind::kUnseen, 2, true}.name() == "unseen_r2_humans");
    const EvalSchema s{SchemaKind::kSeen, 3, false};
    CHECK(EvalSchema::from_json(s.to_json()).name() == s.name());
    CHECK_THROWS_AS((EvalSchema{SchemaKind::kSeen, 0, false}.validate()), Error);
    CHECK_THROWS_AS((EvalSchema{SchemaKind::kNoParaphrase, 1, true}.validate()), Error);
    CHECK_THROWS_AS(parse_schema_kind("sideways"), Error);
  }

  TEST_CASE("separable triples score 1.0 without paraphrasing") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 10);
    const auto det = detectors::make_supervised_detector(separating_classifier(v));
    const std::vector<const detectors::Detector*> dets{det.get()};
    const auto r = run_schema(dets, triples, {}, nullptr, {}, 1, "toy");
    const auto& m = r.find("toy", "no_paraphrase", "radar");
    REQUIRE(m.auroc.has_value());
    CHECK(*m.auroc == 1.0);
    CHECK(m.n_ai == 10);
    CHECK(m.n_human == 10);
    CHECK(m.auroc_from_scores() == m.auroc);
  }

  TEST_CASE("identity mock makes seen equal no paraphrase") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 12);
    const auto det = detectors::make_supervised_detector(random_classifier(v, 2));
    const std::vector<const detectors::Detector*> dets{det.get()};
    const paraphrase::ServiceParaphraser identity(paraphrase::Kind::kMock,
                                                  paraphrase::MockParaphraseService::identity(), v, 100);
    const auto a = run_schema(dets, triples, {SchemaKind::kNoParaphrase, 1, false}, nullptr, {}, 4);
    const auto b = run_schema(dets, triples, {SchemaKind::kSeen, 1, false}, &identity, {}, 4);
    REQUIRE(a.results[0].scores.size() == b.results[0].scores.size());
    CHECK(*a.results[0].auroc == *b.results[0].auroc);
    for (std::size_t i = 0; i < a.results[0].scores.size(); ++i)
      CHECK(a.results[0].scores[i].ai_score == b.results[0].scores[i].ai_score);
  }

  TEST_CASE("one seen round equals a manual paraphrase then score") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 8);
    lm::RnnConfig rc;
    rc.init_scale = 0.5;
    rc.seed = 3;
    const paraphrase::SeenParaphraser seen(std::make_shared<lm::RnnLM>(v, rc), 10);
    const auto clf = random_classifier(v, 5);
    const auto det = detectors::make_supervised_detector(clf);
    const std::vector<const detectors::Detector*> dets{det.get()};
    const std::uint64_t seed = 21;
    const auto r = run_schema(dets, triples, {SchemaKind::kSeen, 1, false}, &seen, {}, seed);
    std::vector<double> ai, human;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      human.push_back(clf->prob_ai(triples[i].human.text));
      lm::SamplingConfig c;
      c.seed = mix_seed(seed, i);
      ai.push_back(clf->prob_ai(seen.paraphrase(triples[i].ai.text, c).text()));
    }
    CHECK(*r.results[0].auroc == auroc(ai, human));
  }

  TEST_CASE("paraphrasing humans labels their paraphrases as AI") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 6);
    const paraphrase::ServiceParaphraser identity(paraphrase::Kind::kMock,
                                                  paraphrase::MockParaphraseService::identity(), v, 100);
    const auto ex = schema_examples(triples, {SchemaKind::kUnseen, 2, true}, &identity, {}, 0, "d");
    REQUIRE(ex.size() == 12);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(ex[6 + i].label == Label::kAiParaphrased);
      CHECK(ex[6 + i].tokens == triples[i].human.text);
    }
    CHECK_THROWS_AS(schema_examples(triples, {SchemaKind::kSeen, 1, false}, nullptr, {}, 0, "d"), Error);
  }

  TEST_CASE("report serializations agree with the scores") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 6);
    const auto d1 = detectors::make_supervised_detector(random_classifier(v, 1), "a");
    const auto d2 = detectors::make_supervised_detector(random_classifier(v, 2), "b");
    const std::vector<const detectors::Detector*> dets{d1.get(), d2.get()};
    const auto r = run_schema(dets, triples, {}, nullptr, {}, 0, "toy");
    const auto j = r.to_json();
    CHECK(j["toy"]["no_paraphrase"]["a"]["auroc"].get<double>() == *r.results[0].auroc);
    const auto csv = r.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    const auto lines = r.scores_jsonl();
    CHECK(static_cast<std::size_t>(std::count(lines.begin(), lines.end(), '\n')) == 24);
    CHECK_THROWS_AS(r.find("toy", "seen", "a"), Error);
  }

  TEST_CASE("transfer matrix diagonal and missing ratios") {
    const auto single = transfer_from_auroc({"A"}, {{0.8}});
    REQUIRE(single.f_ratio[0][0].has_value());
    CHECK(*single.f_ratio[0][0] == 1.0);
    const auto t = transfer_from_auroc({"A", "B"}, {{0.8, 0.3}, {0.4, 0.0}});
    CHECK(*t.f_ratio[1][0] == 0.5);
    CHECK_FALSE(t.f_ratio[0][1].has_value());
    CHECK_THROWS_AS(transfer_from_auroc({"A", "B"}, {{0.8}}), Error);
  }

  TEST_CASE("duplicate detectors give an all-ones symmetric matrix") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 8);
    const auto det = detectors::make_supervised_detector(random_classifier(v, 7));
    const std::vector<TransferInput> inputs{{"A", det.get(), triples}, {"B", det.get(), triples}};
    const auto t = transfer_matrix(inputs, {}, nullptr, {}, 0);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) CHECK(*t.f_ratio[a][b] == 1.0);
  }

  TEST_CASE("2x2 transfer matches four run_schema calls") {
    const auto v = eval_vocab();
    const auto ta = separable_triples(v, 8);
    auto tb = separable_triples(v, 10);
    std::swap(tb[0].human, tb[0].ai);
    const auto da = detectors::make_supervised_detector(random_classifier(v, 1));
    const auto db = detectors::make_supervised_detector(separating_classifier(v));
    const std::vector<TransferInput> inputs{{"A", da.get(), ta}, {"B", db.get(), tb}};
    const auto t = transfer_matrix(inputs, {}, nullptr, {}, 3);
    const detectors::Detector* dets[] = {da.get(), db.get()};
    const std::span<const CorpusTriple> corpora[] = {ta, tb};
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) {
        const std::vector<const detectors::Detector*> one{dets[a]};
        const auto r = run_schema(one, corpora[b], {}, nullptr, {}, 3);
        CHECK(t.auroc[a][b] == *r.results[0].auroc);
      }
    }
    CHECK(t.holistic[0] == doctest::Approx(*t.f_ratio[0][0] + *t.f_ratio[0][1]));
  }

  TEST_CASE("ensemble endpoints and midpoint") {
    CHECK(ensemble_score(0.2, 0.8, 0.0) == 0.2);
    CHECK(ensemble_score(0.2, 0.8, 1.0) == 0.8);
    CHECK(ensemble_score(0.2, 0.8, 0.5) == 0.5);
    CHECK_THROWS_AS(ensemble_score(0.2, 0.8, 1.5), Error);

    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 10);
    std::shared_ptr<const detectors::Detector> base = detectors::make_supervised_detector(random_classifier(v, 1));
    std::shared_ptr<const detectors::Detector> aug = detectors::make_supervised_detector(random_classifier(v, 2));
    const auto ex = schema_examples(triples, {}, nullptr, {}, 0, "d");
    const std::vector<double> betas{0.0, 0.5, 1.0};
    const auto sweep = ensemble_sweep(base, aug, betas, ex, 0);
    CHECK(sweep.points[0].auroc == sweep.base_auroc);
    CHECK(sweep.points[2].auroc == sweep.augmented_auroc);
    const std::vector<const detectors::Detector*> b1{base.get()}, a1{aug.get()};
    CHECK(sweep.base_auroc == *score_examples(b1, ex, "d", "s", 0).results[0].auroc);
    CHECK(sweep.augmented_auroc == *score_examples(a1, ex, "d", "s", 0).results[0].auroc);
    const EnsembleDetector same(base, base, 0.5);
    CHECK(same.score(ex[0].tokens, 0).ai_score == doctest::Approx(base->score(ex[0].tokens, 0).ai_score));
  }

  TEST_CASE("length partition slices a stable sort") {
    const std::vector<std::size_t> lengths{5, 1, 9, 3, 3, 7, 2, 8, 6, 4};
    const auto parts = length_partition(lengths, 5);
    REQUIRE(parts.size() == 5);
    std::vector<std::size_t> order(lengths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
    std::vector<std::size_t> flat;
    for (const auto& p : parts) {
      CHECK(p.size() == 2);
      flat.insert(flat.end(), p.begin(), p.end());
    }
    CHECK(flat == order);
    CHECK(length_partition(lengths, 1)[0] == order);
  }

  TEST_CASE("length buckets cover every AI example") {
    const auto v = eval_vocab();
    const auto triples = separable_triples(v, 10);
    const auto det = detectors::make_supervised_detector(separating_classifier(v));
    const auto ex = schema_examples(triples, {}, nullptr, {}, 0, "d");
    const auto buckets = length_buckets(*det, ex, 5, 0);
    REQUIRE(buckets.size() == 5);
    std::size_t total = 0;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      CHECK(buckets[b].members.size() == 2);
      CHECK(buckets[b].min_length <= buckets[b].max_length);
      if (b > 0) CHECK(buckets[b - 1].max_length <= buckets[b].min_length);
      REQUIRE(buckets[b].auroc.has_value());
      CHECK(*buckets[b].auroc == 1.0);
      total += buckets[b].members.size();
    }
    CHECK(total == 10);
    CHECK_THROWS_AS(length_buckets(*det, ex, 1, 0), Error);
    const auto csv = length_plot_csv(buckets);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  }

  TEST_CASE("retokenizing detector maps words across vocabularies") {
    const auto v = eval_vocab();
    auto tokens = Vocabulary().tokens();
    for (int i = 5; i >= 0; --i) tokens.push_back("w" + std::to_string(i));
    const Vocabulary other(tokens);
    std::shared_ptr<const detectors::Detector> inner = detectors::make_supervised_detector(random_classifier(v, 3));
    const RetokenizingDetector r(inner, other, v);
    const auto x_other = other.encode("w1 w4 w2");
    const auto x_v = v.encode("w1 w4 w2");
    CHECK(r.score(x_other, 0).ai_score == inner->score(x_v, 0).ai_score);
  }
}
