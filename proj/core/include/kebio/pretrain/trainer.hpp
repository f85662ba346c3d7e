#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "kebio/kbase/knowledge_base.hpp"
#include "kebio/model.hpp"
#include "kebio/ndmath/optim.hpp"
#include "kebio/pretrain/losses.hpp"
#include "kebio/pretrain/masking.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct LossReport {
  std::int64_t step = 0;
  double total = 0;
  double mlm = 0;
  double ed = 0;
  double el = 0;
  double lr = 0;
  double grad_norm = 0;
};

/// Trainable tensors of the model plus, unless frozen, the entity table.
/// Weight matrices decay; biases, norms and embeddings do not.
std::vector<OptimParam> optim_params(const KebioModel& model, const Tensor& entity_table);

/// Joint-objective training over a fixed, already tokenized corpus. Batches
/// and masking draws are pure functions of (seed, step), so a run split at any
/// step and resumed from a checkpoint replays the same updates.
class Pretrainer {
 public:
  Pretrainer(KebioModel& model, KnowledgeBase& kb, std::vector<TokenizedInput> corpus,
             PretrainConfig config);

  /// The collated batch consumed at `step`.
  std::vector<MaskedBatch> batch_for_step(std::int64_t step) const;

  /// Losses without recording gradients.
  LossReport evaluate(std::span<const MaskedBatch> batch) const;

  /// One optimizer update on batch_for_step(step()).
  LossReport train_step();

  /// Argmax of the full-table linking softmax against the gold entity, over
  /// every linked mention of the unmasked corpus.
  double linking_accuracy() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }
  AdamW& optimizer() { return *optim_; }
  const PretrainConfig& config() const { return config_; }
  const std::vector<TokenizedInput>& corpus() const { return corpus_; }

 private:
  KebioModel* model_;
  KnowledgeBase* kb_;
  std::vector<TokenizedInput> corpus_;
  PretrainConfig config_;
  std::unique_ptr<AdamW> optim_;
  LinearSchedule schedule_;
  std::int64_t step_ = 0;
};

}  // namespace kebio::inline KEBIO_PRECISION_NS
