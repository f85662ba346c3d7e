#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kebio/annotate/annotator.hpp"
#include "kebio/model.hpp"
#include "kebio/ndmath/optim.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct FinetuneConfig {
  double lr = 5e-5;
  int epochs = 20;
  std::size_t batch_size = 16;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  std::size_t max_len = 128;
  bool use_entity_memory = true;
  bool search = false;  // sweep kLearningRateGrid, keep the best dev score
  double annotate_threshold = kDefaultLinkThreshold;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kLearningRateGrid[] = {1e-5, 3e-5, 5e-5};

/// Learning rates a run visits: the grid under search, else {lr}.
std::vector<double> learning_rates(const FinetuneConfig& config);

/// Value copy of a set of tensors, for best-dev selection and search restarts.
class ParamSnapshot {
 public:
  ParamSnapshot() = default;
  explicit ParamSnapshot(const std::vector<NamedTensor>& params);
  void restore(const std::vector<NamedTensor>& params) const;

 private:
  std::vector<std::vector<real>> values_;
};

/// Model inputs for task text: wordpieces plus, when the entity memory is on
/// and a KB is available, the mentions the dictionary annotator finds.
TokenizedInput encode_task_text(const std::vector<std::string>& tokens, const Tokenizer& tokenizer,
                                const Annotator* annotator, const KnowledgeBase* kb,
                                std::size_t max_len);

/// Epoch order for fine-tuning: a seeded permutation of [0, n).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

}  // namespace kebio::inline KEBIO_PRECISION_NS
