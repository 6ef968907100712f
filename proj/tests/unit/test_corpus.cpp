#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "radar/core/json_io.hpp"
#include "radar/corpus/corpus.hpp"
#include "radar/corpus/synthetic.hpp"
#include "radar/lm/ngram.hpp"
#include "test_support.hpp"

using namespace radar;
using namespace radar::corpus;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

std::vector<LabeledExample> numbered_examples(const Vocabulary& v, int n, int len) {
  std::vector<LabeledExample> out;
  for (int i = 0; i < n; ++i) {
    std::string text;
    for (int j = 0; j < len; ++j) text += "w" + std::to_string((i + j) % 5) + " ";
    out.push_back(make_example(v, text, Label::kHuman, "toy"));
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("single jsonl record loads with its label") {
    testing::TempDir dir("corpus");
    const auto path = dir.path() / "one.jsonl";
    write_lines(path, {R"({"text":"a b","label":"human","source":"toy"})"});
    const auto v = Vocabulary::build(std::vector<std::string>{"a b"});
    const auto ex = load_corpus(path, CorpusFormat::kJsonl, v);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].label == Label::kHuman);
    CHECK(ex[0].text.size() == 2);
    CHECK(ex[0].source == "toy");
  }

  TEST_CASE("label defaults to human and unknown words map to unk") {
    testing::TempDir dir("corpus");
    const auto path = dir.path() / "a.jsonl";
    write_lines(path, {R"({"text":"a zz"})"});
    const auto v = Vocabulary::build(std::vector<std::string>{"a"});
    const auto ex = load_corpus(path, CorpusFormat::kJsonl, v);
    CHECK(ex[0].label == Label::kHuman);
    CHECK(ex[0].text[1] == Vocabulary::kUnk);
  }

  TEST_CASE("empty corpus is an error") {
    testing::TempDir dir("corpus");
    const auto path = dir.path() / "empty.jsonl";
    write_lines(path, {});
    try {
      load_corpus(path, CorpusFormat::kJsonl, Vocabulary());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("empty corpus") != std::string::npos);
    }
  }

  TEST_CASE("malformed record error names the line") {
    testing::TempDir dir("corpus");
    const auto path = dir.path() / "bad.jsonl";
    write_lines(path, {R"({"text":"a"})", "{not json"});
    try {
      load_corpus(path, CorpusFormat::kJsonl, Vocabulary());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }

  TEST_CASE("plain text format reads one document per line") {
    testing::TempDir dir("corpus");
    const auto path = dir.path() / "a.txt";
    write_lines(path, {"a b", "", "b a"});
    const auto recs = read_records(path, CorpusFormat::kPlainText);
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].text == "b a");
  }

  TEST_CASE("write_corpus then load_corpus is the identity") {
    testing::TempDir dir("corpus");
    const auto v = Vocabulary::build(std::vector<std::string>{"one two three"});
    const std::vector<LabeledExample> ex{make_example(v, "one two", Label::kHuman, "h"),
                                         make_example(v, "two three", Label::kAiOriginal, "m"),
                                         make_example(v, "three one", Label::kAiParaphrased, "p")};
    write_corpus(dir.path() / "c.jsonl", ex);
    const auto back = load_corpus(dir.path() / "c.jsonl", CorpusFormat::kJsonl, v);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].text == ex[i].text);
      CHECK(back[i].label == ex[i].label);
      CHECK(back[i].source == ex[i].source);
    }
  }

  TEST_CASE("label names round trip") {
    for (Label l : {Label::kHuman, Label::kAiOriginal, Label::kAiParaphrased}) CHECK(parse_label(label_name(l)) == l);
    CHECK_THROWS_AS(parse_label("robot"), Error);
  }

  TEST_CASE("build_ai_corpus shares the prompt and respects the cap") {
    const auto v = testing::word_vocab(5);
    lm::NGramModel target(v, {});
    const auto human = numbered_examples(v, 6, 12);
    CompletionConfig cfg;
    cfg.prompt_len = 4;
    cfg.max_len = 9;
    cfg.seed = 3;
    const auto out = build_ai_corpus(human, target, cfg);
    REQUIRE(out.triples.size() == 6);
    for (std::size_t i = 0; i < out.triples.size(); ++i) {
      const auto& t = out.triples[i];
      CHECK(t.human.text == human[i].text);
      CHECK(t.ai.label == Label::kAiOriginal);
      CHECK(t.ai.text.size() <= 9);
      CHECK(std::equal(t.ai.text.begin(), t.ai.text.begin() + 4, t.human.text.begin()));
    }
    const auto again = build_ai_corpus(human, target, cfg);
    for (std::size_t i = 0; i < out.triples.size(); ++i) CHECK(again.triples[i].ai.text == out.triples[i].ai.text);
  }

  TEST_CASE("build_ai_corpus with the reference defaults") {
    const auto v = testing::word_vocab(5);
    lm::NGramModel target(v, {});
    const auto human = numbered_examples(v, 3, 40);
    const CompletionConfig cfg;
    CHECK(cfg.prompt_len == 30);
    CHECK(cfg.max_len == 200);
    for (const auto& t : build_ai_corpus(human, target, cfg).triples) {
      CHECK(t.ai.text.size() <= 200);
      CHECK(std::equal(t.ai.text.begin(), t.ai.text.begin() + 30, t.human.text.begin()));
    }
  }

  TEST_CASE("an eos-only generator yields the bare prompt") {
    const auto v = testing::word_vocab(5);
    const testing::FnLM eos(v, [&](TokenSpan) { return testing::one_hot(v.size(), Vocabulary::kEos); });
    CompletionConfig cfg;
    cfg.prompt_len = 3;
    cfg.max_len = 8;
    const auto human = numbered_examples(v, 2, 6);
    for (const auto& t : build_ai_corpus(human, eos, cfg).triples) {
      CHECK(t.ai.text == TokenSequence(t.human.text.begin(), t.human.text.begin() + 3));
    }
  }

  TEST_CASE("short texts are skipped and counted") {
    const auto v = testing::word_vocab(5);
    lm::NGramModel target(v, {});
    auto human = numbered_examples(v, 2, 6);
    const auto shorter = numbered_examples(v, 1, 2);
    human.insert(human.begin() + 1, shorter[0]);
    CompletionConfig cfg;
    cfg.prompt_len = 4;
    cfg.max_len = 8;
    const auto out = build_ai_corpus(human, target, cfg);
    CHECK(out.triples.size() == 2);
    CHECK(out.skipped_short == 1);
    CHECK_THROWS_AS(build_ai_corpus(shorter, target, cfg), Error);
    cfg.max_len = 4;
    CHECK_THROWS_AS(build_ai_corpus(human, target, cfg), Error);
  }

  TEST_CASE("split of 10 at 0.8 gives 8 and 2") {
    std::vector<int> items(10);
    for (int i = 0; i < 10; ++i) items[i] = i;
    const auto [train, val] = split<int>(items, {0.8, 0.2, 1});
    CHECK(train.size() == 8);
    CHECK(val.size() == 2);
    const auto [train2, val2] = split<int>(items, {0.8, 0.2, 1});
    CHECK(train == train2);
    CHECK(val == val2);
  }

  TEST_CASE("different seeds give different partitions of the same multiset") {
    std::vector<int> items(100);
    for (int i = 0; i < 100; ++i) items[i] = i;
    const auto a = split<int>(items, {0.5, 0.5, 1});
    const auto b = split<int>(items, {0.5, 0.5, 2});
    CHECK(a.first != b.first);
    for (const auto* p : {&a, &b}) {
      auto all = p->first;
      all.insert(all.end(), p->second.begin(), p->second.end());
      std::sort(all.begin(), all.end());
      CHECK(all == items);
    }
  }

  TEST_CASE("split rejects bad fractions and empty partitions") {
    std::vector<int> items{1, 2, 3};
    CHECK_THROWS_AS(split<int>(items, {0.9, 0.2, 0}), Error);
    CHECK_THROWS_AS(split<int>(items, {0.0, 0.5, 0}), Error);
    CHECK_THROWS_AS(split<int>(items, {0.95, 0.05, 0}), Error);
  }

  TEST_CASE("three way split is disjoint and exhaustive") {
    const auto v = testing::word_vocab(5);
    std::vector<CorpusTriple> triples;
    for (const auto& e : numbered_examples(v, 10, 3)) triples.push_back({e, e, std::nullopt});
    const auto s = split_three_way(triples, {0.6, 0.2, 4});
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 2);
    CHECK(s.test.size() == 2);
    CHECK_THROWS_AS(split_three_way(triples, {0.8, 0.2, 4}), Error);
  }

  TEST_CASE("manifest round trips and detects checksum mismatch") {
    Manifest m;
    m.members.push_back({"train_human.jsonl", "train_human", 3});
    m.vocabulary = testing::word_vocab(3).tokens();
    m.vocabulary_checksum = testing::word_vocab(3).checksum();
    m.seed = 9;
    const auto back = Manifest::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    auto j = m.to_json();
    j["vocabulary_checksum"] = "1";
    CHECK_THROWS_AS(Manifest::from_json(j), Error);
  }

  TEST_CASE("synthetic generation is seed deterministic") {
    SyntheticConfig cfg;
    cfg.documents = 20;
    cfg.target_train_documents = 10;
    cfg.seed = 5;
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    CHECK(a.human == b.human);
    CHECK(a.target_train == b.target_train);
    CHECK(a.human.size() == 20);
    CHECK(a.target_train.size() == 10);
    for (const auto& t : a.human) {
      const auto n = tokenize(t).size();
      CHECK(n >= static_cast<std::size_t>(cfg.min_len));
      CHECK(n <= static_cast<std::size_t>(cfg.max_len));
    }
    cfg.seed = 6;
    CHECK(generate_synthetic(cfg).human != a.human);
    CHECK(SyntheticConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  }
}
