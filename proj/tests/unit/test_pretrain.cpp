#include <gtest/gtest.h>

#include <cmath>

#include "kebio/ndmath/ops.hpp"
#include "kebio/pretrain/losses.hpp"
#include "kebio/pretrain/trainer.hpp"
#include "support.hpp"

namespace {

using namespace kebio;
using kebio_test::bitwise_equal;

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

TokenizedInput three_piece_entity() {
  TokenizedInput in;
  in.ids = {Vocabulary::kCls, 10, 11, 12, 13, 14, Vocabulary::kSep};
  in.attention_mask.assign(7, 1);
  in.word_start = {0, 1, 1, 0, 0, 1, 0};
  in.words = {{1, 2}, {2, 5}, {5, 6}};
  in.mentions = {{2, 5, 0}};
  return in;
}

TEST(Masking, ZeroSelectRateLeavesInput) {
  PretrainConfig cfg;
  cfg.select_rate = 0;
  Rng rng(1);
  const auto in = three_piece_entity();
  const MaskedBatch b = mask_sequence(in, cfg, 20, rng);
  EXPECT_EQ(b.input.ids, in.ids);
  for (int l : b.mlm_labels) EXPECT_EQ(l, nd::kIgnoreIndex);
}

TEST(Masking, SelectedEntityIsMaskedWhole) {
  PretrainConfig cfg;
  cfg.select_rate = 1;
  cfg.mask_share = 1;
  cfg.random_share = 0;
  cfg.keep_share = 0;
  Rng rng(2);
  const MaskedBatch b = mask_sequence(three_piece_entity(), cfg, 20, rng);
  for (std::size_t p = 2; p < 5; ++p) {
    EXPECT_EQ(b.input.ids[p], Vocabulary::kMask);
    EXPECT_EQ(b.mlm_labels[p], static_cast<int>(9 + p));
  }
  EXPECT_EQ(b.input.ids[0], Vocabulary::kCls);
  EXPECT_EQ(b.input.ids[6], Vocabulary::kSep);
}

TEST(Masking, EntitySpansAreNeverPartiallySelected) {
  PretrainConfig cfg;
  cfg.select_rate = 0.5;
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(s);
    const MaskedBatch b = mask_sequence(three_piece_entity(), cfg, 20, rng);
    const bool first = b.mlm_labels[2] != nd::kIgnoreIndex;
    for (std::size_t p = 3; p < 5; ++p) EXPECT_EQ(b.mlm_labels[p] != nd::kIgnoreIndex, first);
    EXPECT_EQ(b.treatment[2], b.treatment[4]);
  }
}

TEST(Masking, WithoutWholeEntityMaskingWordsAreUnits) {
  PretrainConfig cfg;
  cfg.whole_entity_masking = false;
  Rng rng(3);
  TokenizedInput in = three_piece_entity();
  in.words = {{1, 2}, {2, 3}, {3, 5}, {5, 6}};
  const MaskedBatch b = mask_sequence(in, cfg, 20, rng);
  EXPECT_EQ(b.units, (std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}, {2, 3}, {3, 5}, {5, 6}}));
}

TEST(Masking, RandomReplacementsAvoidReservedIds) {
  PretrainConfig cfg;
  cfg.select_rate = 1;
  cfg.mask_share = 0;
  cfg.random_share = 1;
  cfg.keep_share = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    const MaskedBatch b = mask_sequence(three_piece_entity(), cfg, 8, rng);
    for (std::size_t p = 1; p < 6; ++p) {
      EXPECT_GE(b.input.ids[p], Vocabulary::kNumReserved);
      EXPECT_LT(b.input.ids[p], 8);
    }
  }
}

TEST(Masking, BioLabelsIgnoreSpecials) {
  const auto labels = bio_labels(three_piece_entity());
  EXPECT_EQ(labels, (std::vector<int>{nd::kIgnoreIndex, kTagO, kTagB, kTagI, kTagI, kTagO,
                                      nd::kIgnoreIndex}));
}

TEST(Masking, TruncationKeepsFirstLinkedAndAllNil) {
  std::vector<PieceMention> m{{1, 2, 0}, {2, 3, kNilEntity}, {3, 4, 1}, {4, 5, 2}};
  EXPECT_EQ(truncate_mentions(m, 2),
            (std::vector<PieceMention>{{1, 2, 0}, {2, 3, kNilEntity}, {3, 4, 1}}));
}

TEST(Masking, SharesMustSumToOne) {
  PretrainConfig cfg;
  cfg.keep_share = 0.3;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Losses, MlmPerfectLogitsNearZero) {
  const Tensor logits = Tensor::from_data({2, 3}, {50, 0, 0, 0, 0, 50});
  EXPECT_NEAR(loss_mlm(logits, std::vector<int>{0, 2}).item(), 0.0, 1e-6);
}

TEST(Losses, MlmUniformIsLogVocab) {
  const Tensor logits = Tensor::zeros({3, 7});
  EXPECT_NEAR(loss_mlm(logits, std::vector<int>{1, nd::kIgnoreIndex, 6}).item(), std::log(7.0), 1e-6);
}

TEST(Losses, MlmTwoPositionDirectFormula) {
  const std::vector<real> v{0.5f, -0.25f, 1.5f, 2.0f, 0.0f, -1.0f};
  const double l0 = -(0.5 - std::log(std::exp(0.5) + std::exp(-0.25) + std::exp(1.5)));
  const double l1 = -(-1.0 - std::log(std::exp(2.0) + std::exp(0.0) + std::exp(-1.0)));
  EXPECT_NEAR(loss_mlm(Tensor::from_data({2, 3}, v), std::vector<int>{0, 2}).item(), (l0 + l1) / 2, 1e-6);
}

TEST(Losses, DetectionLimits) {
  EXPECT_NEAR(loss_entity_detection(Tensor::from_data({2, 3}, {60, 0, 0, 60, 0, 0}),
                                    std::vector<int>{kTagO, kTagO}).item(), 0.0, 1e-6);
  EXPECT_NEAR(loss_entity_detection(Tensor::zeros({4, 3}), std::vector<int>{0, 1, 2, 1}).item(),
              std::log(3.0), 1e-6);
}

TEST(Losses, DetectionFourTokenDirect) {
  const std::vector<real> v{0.1f, 0.2f, 0.3f, 1.0f, -1.0f, 0.0f, 0.5f, 0.5f, -0.5f, 2.0f, 1.0f, 0.0f};
  const std::vector<int> t{2, 0, nd::kIgnoreIndex, 1};
  double total = 0;
  int n = 0;
  for (int r = 0; r < 4; ++r) {
    if (t[r] == nd::kIgnoreIndex) continue;
    double z = 0;
    for (int c = 0; c < 3; ++c) z += std::exp(double(v[r * 3 + c]));
    total += -(double(v[r * 3 + t[r]]) - std::log(z));
    ++n;
  }
  EXPECT_NEAR(loss_entity_detection(Tensor::from_data({4, 3}, v), t).item(), total / n, 1e-6);
}

TEST(Losses, LinkingSingleEntityIsZero) {
  EXPECT_NEAR(loss_entity_linking(Tensor::from_data({1, 2}, {0.3f, -2}), std::vector<int>{0},
                                  Tensor::from_data({1, 2}, {1, 4})).item(), 0.0, 1e-7);
}

TEST(Losses, LinkingOrthonormalClosedForm) {
  const std::size_t n = 5;
  std::vector<real> eye(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1;
  const Tensor table = Tensor::from_data({n, n}, eye);
  const Tensor proj = Tensor::from_data({1, n}, {0, 0, 1, 0, 0});
  const double expect = -std::log(std::exp(1.0) / (std::exp(1.0) + double(n) - 1));
  EXPECT_NEAR(loss_entity_linking(proj, std::vector<int>{2}, table).item(), expect, 1e-6);
}

TEST(Losses, LinkingUniformIsLogEntities) {
  EXPECT_NEAR(loss_entity_linking(Tensor::zeros({2, 3}), std::vector<int>{0, 5}, Tensor::full({6, 3}, 1)).item(),
              std::log(6.0), 1e-6);
}

TEST(Losses, LinkingTargetOutOfRangeIsDataError) {
  EXPECT_THROW(loss_entity_linking(Tensor::zeros({1, 3}), std::vector<int>{6}, Tensor::full({6, 3}, 1)),
               DataError);
}

class TrainerTest : public ::testing::Test {
 protected:
  void SetUp() override { world = kebio_test::toy_world(tiny(), 12, 24, 41, 120); }
  PretrainConfig config() const {
    PretrainConfig c;
    c.lr = 1e-3;
    c.warmup_steps = 2;
    c.total_steps = 20;
    c.batch_size = 4;
    c.select_rate = 0.3;
    c.seed = 9;
    return c;
  }
  kebio_test::ToyWorld world;
};

TEST_F(TrainerTest, FrozenEmbeddingsStayBitIdentical) {
  PretrainConfig c = config();
  c.freeze_entity_embeddings = true;
  const Tensor before = world.kb.embeddings().clone();
  Pretrainer t(world.model, world.kb, world.inputs, c);
  for (int i = 0; i < 3; ++i) t.train_step();
  EXPECT_TRUE(bitwise_equal(world.kb.embeddings(), before));
}

TEST_F(TrainerTest, UnfrozenEmbeddingsMove) {
  const Tensor before = world.kb.embeddings().clone();
  Pretrainer t(world.model, world.kb, world.inputs, config());
  t.train_step();
  EXPECT_FALSE(bitwise_equal(world.kb.embeddings(), before));
}

TEST_F(TrainerTest, ZeroLearningRateKeepsParameters) {
  PretrainConfig c = config();
  c.lr = 0;
  std::vector<Tensor> before;
  for (const auto& p : world.model.parameters()) before.push_back(p.tensor.clone());
  Pretrainer t(world.model, world.kb, world.inputs, c);
  const LossReport r = t.train_step();
  EXPECT_TRUE(std::isfinite(r.total));
  const auto after = world.model.parameters();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_TRUE(bitwise_equal(after[i].tensor, before[i])) << after[i].name;
}

TEST_F(TrainerTest, ReportedTotalIsSumOfTerms) {
  Pretrainer t(world.model, world.kb, world.inputs, config());
  for (int i = 0; i < 3; ++i) {
    const LossReport r = t.train_step();
    EXPECT_NEAR(r.total, r.mlm + r.ed + r.el, 1e-6);
  }
}

TEST_F(TrainerTest, BatchesArePureFunctionsOfStep) {
  Pretrainer a(world.model, world.kb, world.inputs, config());
  const auto b1 = a.batch_for_step(5);
  const auto b2 = a.batch_for_step(5);
  ASSERT_EQ(b1.size(), b2.size());
  for (std::size_t i = 0; i < b1.size(); ++i) {
    EXPECT_EQ(b1[i].input.ids, b2[i].input.ids);
    EXPECT_EQ(b1[i].mlm_labels, b2[i].mlm_labels);
  }
}

TEST_F(TrainerTest, DetectionLossIgnoresGroupOneParameters) {
  Pretrainer t(world.model, world.kb, world.inputs, config());
  const auto batch = t.batch_for_step(0);
  const LossReport before = t.evaluate(batch);
  for (auto& layer : world.model.encoder.group1) {
    // Uniform shifts would vanish under the layer norms; use a patterned one.
    auto w = layer.ffn_in_w.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += static_cast<real>(0.2 * (i % 3));
  }
  const LossReport after = t.evaluate(batch);
  EXPECT_EQ(before.ed, after.ed);
  EXPECT_NE(before.mlm, after.mlm);
}

TEST_F(TrainerTest, OptimizerParamsDecayOnlyWeights) {
  world.kb.embeddings().set_requires_grad(true);
  const auto params = optim_params(world.model, world.kb.embeddings());
  bool saw_table = false;
  for (const auto& p : params) {
    const bool weight = p.name.ends_with(".weight");
    EXPECT_EQ(p.decay, weight) << p.name;
    saw_table = saw_table || p.name == "entity_embeddings";
  }
  EXPECT_TRUE(saw_table);
}

TEST_F(TrainerTest, EmptyCorpusIsUsageError) {
  EXPECT_THROW(Pretrainer(world.model, world.kb, {}, config()), UsageError);
}

}  // namespace
