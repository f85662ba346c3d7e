#include "kebio/pretrain/losses.hpp"

#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {
bool any_label(std::span<const int> labels) {
  for (int l : labels) {
    if (l != nd::kIgnoreIndex) return true;
  }
  return false;
}
}  // namespace

Tensor loss_mlm(const Tensor& mlm_logits, std::span<const int> labels) {
  if (!any_label(labels)) return Tensor::scalar(0);
  return nd::cross_entropy_logits(mlm_logits, labels);
}

Tensor loss_entity_detection(const Tensor& bio_logits, std::span<const int> labels) {
  if (!any_label(labels)) return Tensor::scalar(0);
  return nd::cross_entropy_logits(bio_logits, labels);
}

Tensor loss_entity_linking(const Tensor& projections, std::span<const int> targets,
                           const Tensor& table) {
  if (targets.empty()) return Tensor::scalar(0);
  if (projections.rows() != targets.size()) {
    throw DimensionError("loss_entity_linking: " + std::to_string(projections.rows()) +
                         " projections for " + std::to_string(targets.size()) + " targets");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= table.rows()) {
      throw DataError("entity-linking target " + std::to_string(t) + " outside entity table of " +
                      std::to_string(table.rows()) + " rows");
    }
  }
  return nd::cross_entropy_logits(nd::matmul(projections, nd::transpose(table)), targets);
}

JointLoss joint_loss(const KebioModel& model, const Tensor& entity_table,
                     std::span<const MaskedBatch> batch) {
  std::vector<Tensor> mlm_rows, bio_rows, link_rows;
  std::vector<int> mlm_targets, bio_targets, link_targets;
  for (const auto& seq : batch) {
    const ForwardResult fwd = model.forward(seq.input, entity_table, FusionSource::kGold);

    std::vector<int> selected;
    for (std::size_t p = 0; p < seq.mlm_labels.size(); ++p) {
      if (seq.mlm_labels[p] != nd::kIgnoreIndex) {
        selected.push_back(static_cast<int>(p));
        mlm_targets.push_back(seq.mlm_labels[p]);
      }
    }
    if (!selected.empty()) mlm_rows.push_back(nd::gather_rows(fwd.final, selected));

    bio_rows.push_back(fwd.bio_logits);
    bio_targets.insert(bio_targets.end(), seq.bio_labels.begin(), seq.bio_labels.end());

    if (fwd.mention_projections.defined()) {
      std::vector<int> linked;
      for (std::size_t m = 0; m < seq.input.mentions.size(); ++m) {
        if (seq.input.mentions[m].entity != kNilEntity) {
          linked.push_back(static_cast<int>(m));
          link_targets.push_back(seq.input.mentions[m].entity);
        }
      }
      if (!linked.empty()) link_rows.push_back(nd::gather_rows(fwd.mention_projections, linked));
    }
  }

  JointLoss out;
  out.mlm = mlm_rows.empty()
                ? Tensor::scalar(0)
                : loss_mlm(model.encoder.mlm_logits(nd::concat(mlm_rows, 0)), mlm_targets);
  out.ed = bio_rows.empty() ? Tensor::scalar(0)
                            : loss_entity_detection(nd::concat(bio_rows, 0), bio_targets);
  out.el = link_rows.empty()
               ? Tensor::scalar(0)
               : loss_entity_linking(nd::concat(link_rows, 0), link_targets, entity_table);
  // One rounding for the three-term sum.
  const Tensor terms[] = {out.mlm, out.ed, out.el};
  out.total = nd::sum(nd::concat(terms, 1));
  return out;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
