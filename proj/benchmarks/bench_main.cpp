#include <benchmark/benchmark.h>

#include <cmath>

#include "kebio/annotate/annotator.hpp"
#include "kebio/model.hpp"
#include "kebio/ndmath/ops.hpp"
#include "kebio/probe/decode.hpp"

namespace {

using namespace kebio;

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  return init_normal({r, c}, 1.0, rng).detach();
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nd::matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

KnowledgeBase synthetic_kb(std::size_t entities, std::size_t dim) {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> names;
  for (std::size_t i = 0; i < entities; ++i) {
    ids.push_back("C" + std::to_string(1000000 + i));
    names.push_back({"compound" + std::to_string(i) + " kinase", "agent" + std::to_string(i)});
  }
  KnowledgeBase kb(std::move(ids), std::move(names), {}, dim);
  Rng rng(7);
  kb.set_embeddings(random_matrix(entities, dim, rng));
  return kb;
}

// Full forward with gold fusion over a sequence of state.range(0) pieces.
void BM_Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  EncoderConfig cfg;
  cfg.vocab_size = 500;
  cfg.hidden_dim = 64;
  cfg.heads = 4;
  cfg.l0 = 2;
  cfg.l1 = 1;
  cfg.max_seq_len = 256;
  cfg.entity_dim = 32;
  cfg.k = 16;
  Rng rng(3);
  const KebioModel model(cfg, rng);
  const KnowledgeBase kb = synthetic_kb(200, cfg.entity_dim);
  TokenizedInput input;
  for (std::size_t i = 0; i < n; ++i) {
    input.ids.push_back(5 + static_cast<int>(i % 400));
    input.attention_mask.push_back(1);
    input.word_start.push_back(1);
  }
  for (std::size_t b = 1; b + 3 < n; b += 8) input.mentions.push_back({b, b + 2, static_cast<int>(b % 200)});
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(input, kb.embeddings()));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Annotate(benchmark::State& state) {
  const KnowledgeBase kb = synthetic_kb(static_cast<std::size_t>(state.range(0)), 4);
  const Annotator annotator(kb);
  std::vector<std::string> tokens;
  for (int i = 0; i < 40; ++i) {
    tokens.push_back(i % 5 == 0 ? "compound" + std::to_string(i) : "the");
    if (i % 5 == 0) tokens.push_back("kinase");
  }
  for (auto _ : state) benchmark::DoNotOptimize(annotator.annotate(tokens));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * tokens.size()));
}
BENCHMARK(BM_Annotate)->Arg(100)->Arg(1000);

// Position-dependent table scorer: isolates search cost from model cost.
class TableScorer final : public MaskScorer {
 public:
  explicit TableScorer(std::size_t v) : v_(v) {}
  std::size_t vocab_size() const override { return v_; }
  std::vector<std::vector<double>> log_probs(std::span<const int> ids,
                                             std::span<const std::size_t> positions) const override {
    std::vector<std::vector<double>> rows;
    for (std::size_t p : positions) {
      std::vector<double> row(v_);
      double z = 0;
      for (std::size_t t = 0; t < v_; ++t) {
        row[t] = std::sin(static_cast<double>(p * 31 + t * 7 + static_cast<std::size_t>(ids[0])));
        z += std::exp(row[t]);
      }
      for (double& x : row) x -= std::log(z);
      rows.push_back(std::move(row));
    }
    return rows;
  }

 private:
  std::size_t v_;
};

void BM_DecodeBeam(benchmark::State& state) {
  const auto masks = static_cast<std::size_t>(state.range(0));
  const TableScorer scorer(1000);
  std::vector<int> ids{Vocabulary::kCls, 42, 43};
  for (std::size_t i = 0; i < masks; ++i) ids.push_back(Vocabulary::kMask);
  ids.push_back(Vocabulary::kSep);
  for (auto _ : state) benchmark::DoNotOptimize(decode_beam(scorer, ids, 5));
}
BENCHMARK(BM_DecodeBeam)->DenseRange(1, 4);

}  // namespace

BENCHMARK_MAIN();
