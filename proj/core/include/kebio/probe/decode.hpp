#pragma once

#include <span>
#include <vector>

#include "kebio/model.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr std::size_t kMaxMaskLength = 10;
inline constexpr std::size_t kDefaultBeam = 5;

/// Anything that yields per-position log-probabilities over the vocabulary.
class MaskScorer {
 public:
  virtual ~MaskScorer() = default;
  virtual std::size_t vocab_size() const = 0;
  /// Row i holds log p(. | ids) at positions[i]; shape [|positions| x V].
  virtual std::vector<std::vector<double>> log_probs(std::span<const int> ids,
                                                     std::span<const std::size_t> positions) const = 0;
};

/// Scores with the MLM head of a model. Fusion, when the entity memory is on
/// and a table is given, uses spans decoded from the detection head.
class ModelScorer final : public MaskScorer {
 public:
  ModelScorer(const KebioModel& model, Tensor entity_table)
      : model_(&model), table_(std::move(entity_table)) {}
  std::size_t vocab_size() const override { return model_->config().vocab_size; }
  std::vector<std::vector<double>> log_probs(std::span<const int> ids,
                                             std::span<const std::size_t> positions) const override;

 private:
  const KebioModel* model_;
  Tensor table_;
};

struct DecodeCandidate {
  std::vector<int> fill;             // token per mask, in position order
  double score = 0;                  // accumulated log-probability
  std::vector<double> step_log_probs;  // in commit order
  std::vector<std::size_t> order;    // mask index committed at each step
};

/// Mask positions of `ids`; UsageError unless there are 1..kMaxMaskLength.
std::vector<std::size_t> mask_positions(std::span<const int> ids);

/// Greedy: each iteration commits the undecoded mask whose best token is most
/// probable (ties go to the later position). Returns the fill.
std::vector<int> decode_confidence(const MaskScorer& scorer, std::vector<int> ids);

/// Arbitrary-order beam: every iteration expands each beam by one
/// (undecoded position, token) commit and keeps the global top `beam` by
/// accumulated log-probability. States that reach the same partial fill
/// through different orders are merged, keeping the higher score. Reserved
/// ids are never committed. Returns up to `beam` candidates, best first.
std::vector<DecodeCandidate> decode_beam(const MaskScorer& scorer, std::vector<int> ids,
                                         std::size_t beam = kDefaultBeam);

}  // namespace kebio::inline KEBIO_PRECISION_NS
