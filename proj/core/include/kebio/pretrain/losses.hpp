#pragma once

#include <span>

#include "kebio/model.hpp"
#include "kebio/pretrain/masking.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// Mean cross-entropy over positions whose label is not the ignore index;
/// 0 when there are none.
Tensor loss_mlm(const Tensor& mlm_logits, std::span<const int> labels);

/// Mean cross-entropy of the [n x 3] detection logits over labelled positions.
Tensor loss_entity_detection(const Tensor& bio_logits, std::span<const int> labels);

/// Softmax over the full entity table of projection . e, cross-entropy to the
/// target row, mean over mentions; 0 when there are no mentions.
Tensor loss_entity_linking(const Tensor& projections, std::span<const int> targets,
                           const Tensor& table);

struct JointLoss {
  Tensor total, mlm, ed, el;
};

/// Batch-level losses: each term is a mean over all of its positions (or
/// mentions) across the batch. `total` is their unweighted sum.
JointLoss joint_loss(const KebioModel& model, const Tensor& entity_table,
                     std::span<const MaskedBatch> batch);

}  // namespace kebio::inline KEBIO_PRECISION_NS
