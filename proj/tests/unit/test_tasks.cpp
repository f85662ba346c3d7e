#include <gtest/gtest.h>

#include <fstream>

#include "kebio/tasks/metrics.hpp"
#include "kebio/tasks/ner.hpp"
#include "kebio/tasks/re.hpp"
#include "support.hpp"

namespace {

using namespace kebio;

TEST(Metrics, OneOfEachGivesHalf) {
  const std::vector<std::vector<Span>> pred{{{0, 1}, {3, 4}}};
  const std::vector<std::vector<Span>> gold{{{0, 1}, {5, 7}}};
  const Prf r = entity_level_f1(pred, gold);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(Metrics, EmptyEverythingIsPerfect) {
  const std::vector<std::vector<Span>> none(3);
  EXPECT_DOUBLE_EQ(entity_level_f1(none, none).f1, 1.0);
}

TEST(Metrics, BoundaryMismatchIsBothFpAndFn) {
  const std::vector<std::vector<Span>> pred{{{0, 2}}};
  const std::vector<std::vector<Span>> gold{{{0, 3}}};
  const Prf r = entity_level_f1(pred, gold);
  EXPECT_EQ(r.tp, 0u);
  EXPECT_DOUBLE_EQ(r.f1, 0.0);
}

TEST(Metrics, SentenceCountMismatchIsDataError) {
  const std::vector<std::vector<Span>> a(2), b(3);
  EXPECT_THROW(entity_level_f1(a, b), DataError);
}

TEST(Metrics, RelationMicroExcludesNegative) {
  // negative 0; preds: tp, fp+fn (wrong positive), fn (missed), neg-neg ignored
  const std::vector<int> pred{1, 2, 0, 0};
  const std::vector<int> gold{1, 1, 2, 0};
  const Prf r = relation_micro_f1(pred, gold, 0);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 2u);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 1.0 / 3.0);
}

TEST(Metrics, Accuracy) {
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 2, 3, 4}, std::vector<int>{1, 0, 3, 0}), 0.5);
  EXPECT_THROW(accuracy(std::vector<int>{1}, std::vector<int>{}), DataError);
}

std::vector<Span> brute_spans(const std::vector<int>& tags) {
  std::vector<Span> out;
  for (std::size_t p = 0; p < tags.size(); ++p) {
    const bool opens = tags[p] == kTagB || (tags[p] == kTagI && (p == 0 || tags[p - 1] == kTagO));
    const bool continues_prev = tags[p] == kTagI && p > 0 && tags[p - 1] != kTagO;
    if (!opens || continues_prev) continue;
    std::size_t e = p + 1;
    while (e < tags.size() && tags[e] == kTagI) ++e;
    out.emplace_back(p, e);
  }
  return out;
}

TEST(NerSpans, MatchBruteForceOnAllLengthFiveSequences) {
  for (int code = 0; code < 243; ++code) {
    std::vector<int> tags(5);
    for (int i = 0, c = code; i < 5; ++i, c /= 3) tags[i] = c % 3;
    EXPECT_EQ(tags_to_spans(tags), brute_spans(tags)) << code;
  }
}

TEST(NerTags, ParseAndRepair) {
  EXPECT_EQ(parse_bio_tag("O"), kTagO);
  EXPECT_EQ(parse_bio_tag("B-Chemical"), kTagB);
  EXPECT_EQ(parse_bio_tag("I"), kTagI);
  EXPECT_THROW(parse_bio_tag("X"), DataError);
  EXPECT_THROW(parse_bio_tag("Bx"), DataError);
  EXPECT_EQ(repair_bio({kTagI, kTagI, kTagO, kTagI}), (std::vector<int>{kTagB, kTagI, kTagO, kTagB}));
}

TEST(NerReader, ConllSentencesAndErrors) {
  kebio_test::TempDir dir("conll");
  {
    std::ofstream f(dir / "a.conll");
    f << "Aspirin B-Chemical\nhelps O\n\n\nfever I-Disease\n";
  }
  const auto ex = read_conll(dir / "a.conll");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].tokens, (std::vector<std::string>{"Aspirin", "helps"}));
  EXPECT_EQ(ex[1].tags, (std::vector<int>{kTagB}));
  {
    std::ofstream f(dir / "b.conll");
    f << "a O\nb Q\n";
  }
  try {
    read_conll(dir / "b.conll");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  EXPECT_THROW(read_conll(dir / "missing"), IoError);
}

ReExample re_example() {
  ReExample ex;
  ex.tokens = {"low", "dose", "aspirin", "reduces", "heart", "attack", "risk"};
  ex.span1 = {2, 3};
  ex.span2 = {4, 6};
  ex.indicator1 = "@CHEMICAL$";
  ex.indicator2 = "@DISEASE$";
  ex.label = "CID";
  return ex;
}

TEST(ReIndicators, SpansCollapseToIndicators) {
  const IndicatorSequence s = replace_with_indicators(re_example());
  EXPECT_EQ(s.tokens, (std::vector<std::string>{"low", "dose", "@CHEMICAL$", "reduces", "@DISEASE$", "risk"}));
  EXPECT_EQ(s.pos1, 2u);
  EXPECT_EQ(s.pos2, 4u);
}

TEST(ReIndicators, SecondSpanFirstInText) {
  ReExample ex = re_example();
  std::swap(ex.span1, ex.span2);
  const IndicatorSequence s = replace_with_indicators(ex);
  EXPECT_EQ(s.pos1, 4u);
  EXPECT_EQ(s.pos2, 2u);
  EXPECT_EQ(s.tokens[2], "@DISEASE$");
}

TEST(ReIndicators, NonSpanTokensAreKeptInOrder) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    ReExample ex;
    const std::size_t n = 4 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) ex.tokens.push_back("w" + std::to_string(i));
    const std::size_t a = rng.below(n - 2);
    const std::size_t a_end = a + 1 + rng.below(std::min<std::size_t>(2, n - a - 2));
    const std::size_t b = a_end + rng.below(n - a_end);
    const std::size_t b_end = b + 1 + rng.below(n - b);
    ex.span1 = {a, a_end};
    ex.span2 = {b, b_end};
    ex.indicator1 = "@A$";
    ex.indicator2 = "@B$";
    const IndicatorSequence s = replace_with_indicators(ex);
    std::vector<std::string> kept, expect;
    for (const auto& t : s.tokens) {
      if (t[0] == 'w') kept.push_back(t);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((i < a || i >= a_end) && (i < b || i >= b_end)) expect.push_back(ex.tokens[i]);
    }
    EXPECT_EQ(kept, expect);
    EXPECT_EQ(s.tokens.size(), expect.size() + 2);
    EXPECT_EQ(s.tokens[s.pos1], "@A$");
    EXPECT_EQ(s.tokens[s.pos2], "@B$");
  }
}

TEST(ReIndicators, OverlapAndRangeAreDataErrors) {
  ReExample ex = re_example();
  ex.span2 = {2, 4};
  EXPECT_THROW(replace_with_indicators(ex), DataError);
  ex.span2 = {6, 8};
  EXPECT_THROW(replace_with_indicators(ex), DataError);
  ex.span2 = {5, 5};
  EXPECT_THROW(replace_with_indicators(ex), DataError);
}

TEST(ReReader, JsonlRecords) {
  kebio_test::TempDir dir("re");
  {
    std::ofstream f(dir / "a.jsonl");
    f << R"({"tokens":["a","b","c"],"span1":[0,1],"span2":[2,3],"indicator1":"@X$","indicator2":"@Y$","label":"r"})"
      << "\n\n"
      << R"({"tokens":["a","b"],"span1":[0,1],"span2":[1,2],"indicator1":"@X$","indicator2":"@Y$","label":1})"
      << "\n";
  }
  const auto ex = read_re_jsonl(dir / "a.jsonl");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].label, "r");
  EXPECT_EQ(ex[1].label, "1");
  {
    std::ofstream f(dir / "b.jsonl");
    f << R"({"tokens":["a","b"],"span1":[0,2],"span2":[1,2],"indicator1":"@X$","indicator2":"@Y$","label":"r"})"
      << "\n";
  }
  EXPECT_THROW(read_re_jsonl(dir / "b.jsonl"), DataError);
}

TEST(ReHeadTest, ZeroStatesGiveBias) {
  Rng rng(1);
  ReHead head = ReHead::init(4, 3, 0.5, rng);
  head.b = Tensor::from_data({3}, {0.1f, -0.2f, 0.3f});
  const Tensor logits = classify_relation(Tensor::zeros({5, 4}), 1, 3, head);
  EXPECT_EQ(logits.rows(), 1u);
  EXPECT_FLOAT_EQ(logits.data()[0], 0.1f);
  EXPECT_FLOAT_EQ(logits.data()[2], 0.3f);
}

TEST(ReHeadTest, SwappingPositionsChangesLogits) {
  Rng rng(2);
  const ReHead head = ReHead::init(4, 3, 0.5, rng);
  Tensor states = Tensor::zeros({5, 4});
  for (std::size_t i = 0; i < 20; ++i) states.mutable_data()[i] = static_cast<real>(rng.normal());
  const Tensor a = classify_relation(states, 1, 3, head);
  const Tensor b = classify_relation(states, 3, 1, head);
  EXPECT_FALSE(kebio_test::bitwise_equal(a, b));
}

TEST(Finetune, LearningRateGrid) {
  FinetuneConfig c;
  c.lr = 2e-4;
  EXPECT_EQ(learning_rates(c), (std::vector<double>{2e-4}));
  c.search = true;
  EXPECT_EQ(learning_rates(c), (std::vector<double>{1e-5, 3e-5, 5e-5}));
}

TEST(Finetune, EpochOrderIsSeededPermutation) {
  auto a = epoch_order(20, 3, 1);
  EXPECT_EQ(a, epoch_order(20, 3, 1));
  EXPECT_NE(a, epoch_order(20, 3, 2));
  std::sort(a.begin(), a.end());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(a[i], i);
}

TEST(Finetune, SnapshotRestores) {
  Tensor t = Tensor::from_data({2}, {1, 2}, true);
  const std::vector<NamedTensor> params{{"t", t}};
  const ParamSnapshot snap(params);
  t.mutable_data()[0] = 7;
  snap.restore(params);
  EXPECT_EQ(t.data()[0], 1.0f);
}

EncoderConfig tiny() {
  EncoderConfig c;
  c.hidden_dim = 16;
  c.heads = 2;
  c.l0 = 1;
  c.l1 = 1;
  c.max_seq_len = 32;
  c.entity_dim = 8;
  c.k = 4;
  return c;
}

TEST(NerTaggerTest, FitRecordsOneDevScorePerEpoch) {
  auto world = kebio_test::toy_world(tiny(), 10, 8, 12, 120);
  std::vector<NerExample> data;
  for (const auto& d : world.docs) {
    NerExample ex{d.tokens, std::vector<int>(d.tokens.size(), kTagO)};
    for (const auto& m : d.mentions) {
      for (std::size_t i = m.start; i < m.end; ++i) ex.tags[i] = i == m.start ? kTagB : kTagI;
    }
    data.push_back(ex);
  }
  FinetuneConfig c;
  c.lr = 1e-3;
  c.epochs = 3;
  c.batch_size = 4;
  c.max_len = 32;
  NerTagger tagger(world.model, world.tokenizer, &world.kb, c);
  const NerResult r = tagger.fit(data, data);
  ASSERT_EQ(r.dev_f1.size(), 3u);
  EXPECT_GE(r.best_epoch, 0);
  EXPECT_DOUBLE_EQ(r.best_dev_f1, *std::max_element(r.dev_f1.begin(), r.dev_f1.end()));
  EXPECT_DOUBLE_EQ(tagger.evaluate(data).f1, r.best_dev_f1);
  EXPECT_EQ(tagger.predict(data[0].tokens).size(), data[0].tokens.size());
}

TEST(RelationClassifierTest, IndicatorsJoinVocabulary) {
  auto world = kebio_test::toy_world(tiny(), 10, 4, 13, 120);
  FinetuneConfig c;
  c.epochs = 1;
  c.max_len = 32;
  RelationClassifier clf(world.model, world.tokenizer, &world.kb, {"CID", "none"}, "none", c);
  const std::size_t before = world.tokenizer.vocab().size();
  clf.register_indicators({re_example()});
  EXPECT_EQ(world.tokenizer.vocab().size(), before + 2);
  EXPECT_EQ(world.model.config().vocab_size, world.tokenizer.vocab().size());
  EXPECT_EQ(clf.label_id("none"), 1);
  EXPECT_THROW(clf.label_id("other"), DataError);
  const int p = clf.predict(re_example());
  EXPECT_TRUE(p == 0 || p == 1);
}

}  // namespace
