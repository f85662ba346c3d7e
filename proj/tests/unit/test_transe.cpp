#include <gtest/gtest.h>

#include "kebio/transe/transe.hpp"
#include "support.hpp"

namespace {

using namespace kebio;

TranseModel two_by_two() {
  TranseModel m;
  m.entities = Tensor::from_data({2, 2}, {0, 0, 0, -4});
  m.relations = Tensor::from_data({1, 2}, {3, 0});
  m.margin = 1.0;
  return m;
}

TEST(TranseScore, ThreeFourFive) {
  EXPECT_DOUBLE_EQ(two_by_two().score(0, 0, 1), 5.0);
  EXPECT_DOUBLE_EQ(two_by_two().score(0, 0, 0), 3.0);
}

TEST(TranseScore, OutOfRangeIsDataError) {
  EXPECT_THROW(two_by_two().score(0, 1, 0), DataError);
  EXPECT_THROW(two_by_two().score(2, 0, 0), DataError);
}

TEST(TranseMargin, HingeExamples) {
  const TranseModel m = two_by_two();
  // pos 3, neg 5: 1 + 3 - 5 < 0
  EXPECT_DOUBLE_EQ(m.margin_loss({0, 0, 0}, {0, 0, 1}), 0.0);
  // pos 5, neg 3: 1 + 5 - 3
  EXPECT_DOUBLE_EQ(m.margin_loss({0, 0, 1}, {0, 0, 0}), 3.0);
  EXPECT_DOUBLE_EQ(m.margin_loss({0, 0, 0}, {0, 0, 0}), 1.0);
}

TEST(TranseNormalize, RowsBecomeUnitAndZeroRowsStay) {
  TranseModel m = two_by_two();
  m.entities = Tensor::from_data({3, 2}, {3, 4, 0, 0, 0, -2});
  m.normalize_entities();
  const auto e = m.entities.data();
  EXPECT_FLOAT_EQ(e[0], 0.6f);
  EXPECT_FLOAT_EQ(e[1], 0.8f);
  EXPECT_EQ(e[2], 0.0f);
  EXPECT_FLOAT_EQ(e[5], -1.0f);
}

TEST(TranseInit, RandomTableWithinBound) {
  Rng rng(3);
  const Tensor t = random_entity_table(50, 16, rng);
  for (real v : t.data()) EXPECT_LE(std::abs(v), 6.0 / 4.0);
}

TEST(TranseTrain, EmptyTripletsIsUsageError) {
  KnowledgeBase kb = kebio_test::synthetic_kb(4, 8);
  EXPECT_THROW(train_transe(kb, TranseConfig{.dim = 8}), UsageError);
}

TEST(TranseTrain, InvalidConfigIsConfigError) {
  KnowledgeBase kb = kebio_test::synthetic_kb(4, 8, {{"C0000000", "r", "C0000001"}});
  TranseConfig c{.dim = 8};
  c.lr = 0;
  EXPECT_THROW(train_transe(kb, c), ConfigError);
}

TEST(TranseTrain, SingleTripletScoresBelowEveryCorruption) {
  KnowledgeBase kb = kebio_test::synthetic_kb(5, 8, {{"C0000000", "r", "C0000001"}});
  TranseConfig c{.dim = 8, .epochs = 200, .lr = 0.01, .batch_size = 1};
  const TranseModel m = train_transe(kb, c);
  const double pos = m.score(0, 0, 1);
  for (std::size_t o = 2; o < 5; ++o) EXPECT_LT(pos, m.score(0, 0, o));
  EXPECT_EQ(kb.embeddings().rows(), 5u);
  EXPECT_EQ(kb.embeddings().cols(), 8u);
}

TEST(TranseTrain, SeparatesPositivesFromCorruptions) {
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < 30; ++i) {
    char s[16], o[16];
    std::snprintf(s, sizeof s, "C%07zu", i);
    std::snprintf(o, sizeof o, "C%07zu", (i * 7 + 3) % 30);
    triplets.push_back({s, i % 2 ? "r1" : "r0", o});
  }
  KnowledgeBase kb = kebio_test::synthetic_kb(30, 16, triplets);
  TranseConfig c{.dim = 16, .epochs = 150, .lr = 0.01, .batch_size = 8, .seed = 4};
  std::vector<double> losses;
  const TranseModel m = train_transe(kb, c, [&](int, double l) { losses.push_back(l); });
  ASSERT_EQ(losses.size(), 150u);
  EXPECT_LT(losses.back(), losses.front());
  const auto ids = index_triplets(kb);
  double pos = 0, neg = 0;
  for (const auto& t : ids) {
    pos += m.score(t);
    neg += m.score(t.subject, t.relation, (t.object + 1) % 30);
  }
  EXPECT_LT(pos, neg);
  EXPECT_GT(tail_hits_at_1(m, ids), 0.5);
}

TEST(TranseTrain, SeededRunsAreIdentical) {
  auto run = [] {
    KnowledgeBase kb = kebio_test::synthetic_kb(6, 8, {{"C0000000", "r", "C0000001"},
                                                       {"C0000002", "r", "C0000003"}});
    train_transe(kb, TranseConfig{.dim = 8, .epochs = 5, .lr = 0.01, .batch_size = 2, .seed = 1});
    return kb.embeddings().clone();
  };
  EXPECT_TRUE(kebio_test::bitwise_equal(run(), run()));
}

TEST(TranseIndex, RelationsFollowKbOrder) {
  KnowledgeBase kb = kebio_test::synthetic_kb(
      3, 4, {{"C0000001", "b", "C0000002"}, {"C0000000", "a", "C0000001"}});
  EXPECT_EQ(index_triplets(kb), (std::vector<TripletIds>{{1, 0, 2}, {0, 1, 1}}));
}

TEST(TranseHits, TieCountsAsMiss) {
  TranseModel m;
  m.entities = Tensor::from_data({3, 1}, {0, 1, 1});
  m.relations = Tensor::from_data({1, 1}, {1});
  const std::vector<TripletIds> t{{0, 0, 1}};
  EXPECT_EQ(tail_hits_at_1(m, t), 0.0);
  m.entities = Tensor::from_data({3, 1}, {0, 1, 5});
  EXPECT_EQ(tail_hits_at_1(m, t), 1.0);
}

}  // namespace
