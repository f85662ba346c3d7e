#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "kebio/entity_memory/entity_memory.hpp"
#include "kebio/model.hpp"
#include "kebio/ndmath/ops.hpp"
#include "support.hpp"

namespace {

using namespace kebio;
using kebio_test::bitwise_equal;

Tensor random(Shape s, std::uint64_t seed, double std = 1.0) {
  Rng rng(seed);
  return init_normal(std::move(s), std::move(std), rng).detach();
}

EntityMemoryParams params(std::size_t d, std::size_t de, std::uint64_t seed) {
  EncoderConfig c;
  c.hidden_dim = d;
  c.entity_dim = de;
  c.init_std = 0.5;
  Rng rng(seed);
  return EntityMemoryParams::init(c, rng);
}

TEST(PoolAndProject, SingleTokenMentionDuplicatesState) {
  const Tensor h = random({4, 3}, 1);
  const auto m = pool_and_project(h, {2, 2}, params(3, 2, 2));
  ASSERT_EQ(m.pooled.shape(), (Shape{1, 6}));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(m.pooled.at(0, j), h.at(2, j));
    EXPECT_EQ(m.pooled.at(0, j + 3), h.at(2, j));
  }
}

TEST(PoolAndProject, IdentityProjectionReturnsPooled) {
  EntityMemoryParams p = params(2, 4, 3);
  p.proj_mention_w = Tensor::from_data({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  p.proj_mention_b = Tensor::zeros({4});
  const auto m = pool_and_project(random({5, 2}, 4), {1, 3}, p);
  EXPECT_TRUE(bitwise_equal(m.projected, m.pooled));
}

TEST(PoolAndProject, MatchesDirectAffineEvaluation) {
  const EntityMemoryParams p = params(5, 3, 5);
  const Tensor h = random({6, 5}, 6);
  const auto m = pool_and_project(h, {1, 4}, p);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = p.proj_mention_b.data()[j];
    for (std::size_t i = 0; i < 5; ++i) {
      s += h.at(1, i) * p.proj_mention_w.at(i, j) + h.at(4, i) * p.proj_mention_w.at(5 + i, j);
    }
    EXPECT_NEAR(m.projected.at(0, j), s, 1e-5);
  }
}

TEST(PoolAndProject, BatchedEqualsOneByOne) {
  const EntityMemoryParams p = params(4, 3, 7);
  const Tensor h = random({8, 4}, 8);
  const std::vector<MentionSpan> spans{{1, 2}, {4, 4}, {5, 7}};
  const auto all = pool_and_project_all(h, spans, p);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto one = pool_and_project(h, spans[i], p);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(all.projected.at(i, j), one.projected.at(0, j));
  }
}

TEST(PoolAndProject, OutOfRangeSpanThrows) {
  EXPECT_THROW(pool_and_project(random({3, 2}, 9), {1, 3}, params(2, 2, 1)), IndexError);
  EXPECT_THROW(pool_and_project(random({3, 2}, 9), {2, 1}, params(2, 2, 1)), IndexError);
}

TEST(RetrieveTopk, LargeKReturnsEveryEntity) {
  const Tensor table = random({5, 3}, 10);
  auto got = retrieve_topk(random({3}, 11).data(), table, 9);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(RetrieveTopk, AlignedEntityRanksFirst) {
  const Tensor table = Tensor::from_data({3, 3}, {0, 1, 0, 0, 0, 1, 1, 0, 0});
  const Tensor q = Tensor::from_data({3}, {2, 0, 0});
  EXPECT_EQ(retrieve_topk(q.data(), table, 1), (std::vector<std::size_t>{2}));
}

TEST(RetrieveTopk, MatchesFullSortOracle) {
  const Tensor table = random({100, 6}, 12);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor q = random({6}, 100 + s);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t e = 0; e < 100; ++e) {
      double dot = 0;
      for (std::size_t j = 0; j < 6; ++j) dot += double(q.data()[j]) * table.at(e, j);
      scored.push_back({-dot, e});
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::size_t> expect;
    for (int i = 0; i < 7; ++i) expect.push_back(scored[i].second);
    EXPECT_EQ(retrieve_topk(q.data(), table, 7), expect);
  }
}

TEST(RetrieveTopk, TiesKeepAscendingIndex) {
  const Tensor table = Tensor::from_data({4, 1}, {1, 2, 2, 1});
  EXPECT_EQ(retrieve_topk(Tensor::from_data({1}, {1}).data(), table, 3),
            (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Attend, SingleCandidateGetsAllWeight) {
  const Tensor table = random({4, 3}, 13);
  const auto r = attend(random({1, 3}, 14), std::vector<std::size_t>{2}, table);
  EXPECT_EQ(r.weights.item(), 1);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.summary.at(0, j), table.at(2, j));
}

TEST(Attend, EqualScoresSplitEvenly) {
  const Tensor table = Tensor::from_data({2, 2}, {1, 0, 1, 0});
  const auto r = attend(Tensor::from_data({1, 2}, {0.3f, 0.9f}), std::vector<std::size_t>{0, 1}, table);
  EXPECT_FLOAT_EQ(r.weights.data()[0], 0.5f);
  EXPECT_FLOAT_EQ(r.weights.data()[1], 0.5f);
}

TEST(Attend, HandEvaluatedTwoEntities) {
  const Tensor table = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  const auto r = attend(Tensor::from_data({1, 2}, {1, 0}), std::vector<std::size_t>{0, 1}, table);
  EXPECT_NEAR(r.weights.data()[0], 0.7311, 1e-4);
  EXPECT_NEAR(r.weights.data()[1], 0.2689, 1e-4);
  EXPECT_NEAR(r.summary.data()[0], 0.7311, 1e-4);
  EXPECT_NEAR(r.summary.data()[1], 0.2689, 1e-4);
}

TEST(Fuse, NoSpansReturnsInputHandle) {
  const Tensor h = random({4, 3}, 15);
  const Tensor out = fuse(h, {}, params(3, 2, 16));
  EXPECT_TRUE(out.same_storage(h));
}

TEST(Fuse, ZeroFusionWeightsLeaveStatesBitwise) {
  EntityMemoryParams p = params(3, 2, 17);
  p.fuse_entity_w = Tensor::zeros({2, 3});
  p.fuse_entity_b = Tensor::zeros({3});
  const Tensor h = random({4, 3}, 18);
  EXPECT_TRUE(bitwise_equal(fuse(h, {{1, 3, random({1, 2}, 19)}}, p), h));
}

TEST(Fuse, OnlyCoveredRowsChangeByOneVector) {
  const EntityMemoryParams p = params(3, 2, 20);
  const Tensor h = random({5, 3}, 21);
  const Tensor summary = random({1, 2}, 22);
  const Tensor out = fuse(h, {{1, 3, summary}}, p);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(out.at(0, j), h.at(0, j));
    EXPECT_EQ(out.at(3, j), h.at(3, j));
    EXPECT_EQ(out.at(4, j), h.at(4, j));
    double delta = p.fuse_entity_b.data()[j];
    for (std::size_t i = 0; i < 2; ++i) delta += summary.data()[i] * p.fuse_entity_w.at(i, j);
    EXPECT_NEAR(out.at(1, j) - h.at(1, j), delta, 1e-5);
    EXPECT_NEAR(out.at(2, j) - h.at(2, j), delta, 1e-5);
  }
}

TEST(Fuse, OverlappingSpansAreRejected) {
  const EntityMemoryParams p = params(3, 2, 23);
  const Tensor s = random({1, 2}, 24);
  EXPECT_THROW(fuse(random({5, 3}, 25), {{0, 3, s}, {2, 4, s}}, p), DataError);
  EXPECT_THROW(fuse(random({5, 3}, 25), {{4, 6, s}}, p), IndexError);
}

TEST(Fuse, FrozenTableReceivesNoGradient) {
  const EntityMemoryParams p = params(3, 2, 26);
  Tensor table = random({4, 2}, 27);
  Tensor h = random({3, 3}, 28);
  h.set_requires_grad(true);
  Tape tape;
  const auto m = pool_and_project(h, {0, 1}, p);
  const auto r = attend(m.projected, std::vector<std::size_t>{0, 1, 2, 3}, table);
  tape.backward(nd::sum(fuse(h, {{0, 2, r.summary}}, p)));
  EXPECT_FALSE(table.has_grad());
  EXPECT_TRUE(h.has_grad());
}

TEST(BioSpans, DecodesAgainstBruteForce) {
  Rng rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<int> tags(n);
    for (auto& t : tags) t = static_cast<int>(rng.below(3));
    // Brute force: a span starts at B, or at I not preceded by B/I; it runs
    // while the following tags are I.
    std::vector<std::pair<std::size_t, std::size_t>> expect;
    for (std::size_t i = 0; i < n; ++i) {
      const bool starts = tags[i] == kTagB || (tags[i] == kTagI && (i == 0 || tags[i - 1] == kTagO));
      if (!starts) continue;
      std::size_t e = i + 1;
      while (e < n && tags[e] == kTagI) ++e;
      expect.push_back({i, e});
    }
    EXPECT_EQ(decode_bio_spans(tags), expect);
  }
}

TEST(Model, MentionFreeInputIsNotFused) {
  EncoderConfig c;
  c.vocab_size = 30;
  c.hidden_dim = 8;
  c.heads = 2;
  c.l0 = 1;
  c.l1 = 1;
  c.entity_dim = 4;
  c.k = 2;
  Rng rng(30);
  const KebioModel model(c, rng);
  TokenizedInput in;
  in.ids = {2, 7, 8, 3};
  in.attention_mask = {1, 1, 1, 1};
  const Tensor table = random({5, 4}, 31);
  const ForwardResult r = model.forward(in, table);
  EXPECT_TRUE(bitwise_equal(r.fused, r.h0));
  in.mentions = {{1, 3, 2}};
  const ForwardResult f = model.forward(in, table);
  EXPECT_FALSE(bitwise_equal(f.fused, f.h0));
  ASSERT_EQ(f.retrievals.size(), 1u);
  EXPECT_EQ(f.retrievals[0].candidates.size(), 2u);
  EXPECT_EQ(f.mention_projections.shape(), (Shape{1, 4}));
}

TEST(Model, NilMentionsAreProjectedButNotFused) {
  EncoderConfig c;
  c.vocab_size = 30;
  c.hidden_dim = 8;
  c.heads = 2;
  c.l0 = 1;
  c.l1 = 1;
  c.entity_dim = 4;
  c.k = 2;
  Rng rng(32);
  const KebioModel model(c, rng);
  TokenizedInput in;
  in.ids = {2, 7, 8, 3};
  in.attention_mask = {1, 1, 1, 1};
  in.mentions = {{1, 2, kNilEntity}};
  const ForwardResult r = model.forward(in, random({5, 4}, 33));
  EXPECT_TRUE(bitwise_equal(r.fused, r.h0));
  EXPECT_TRUE(r.mention_projections.defined());
}

}  // namespace
