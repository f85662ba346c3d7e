#include "kebio/tasks/finetune.hpp"

#include <algorithm>
#include <numeric>

namespace kebio::inline KEBIO_PRECISION_NS {

void FinetuneConfig::validate() const {
  if (!(lr >= 0)) throw ConfigError("finetune lr must be >= 0");
  if (epochs < 1) throw ConfigError("finetune epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("finetune batch_size must be >= 1");
  if (max_len < 3) throw ConfigError("finetune max_len must be >= 3");
}

std::vector<double> learning_rates(const FinetuneConfig& config) {
  if (config.search) return {std::begin(kLearningRateGrid), std::end(kLearningRateGrid)};
  return {config.lr};
}

ParamSnapshot::ParamSnapshot(const std::vector<NamedTensor>& params) {
  for (const auto& p : params) values_.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
}

void ParamSnapshot::restore(const std::vector<NamedTensor>& params) const {
  if (params.size() != values_.size()) throw UsageError("snapshot does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    auto dst = t.mutable_data();
    if (dst.size() != values_[i].size()) throw UsageError("snapshot shape mismatch for " + params[i].name);
    std::copy(values_[i].begin(), values_[i].end(), dst.begin());
  }
}

TokenizedInput encode_task_text(const std::vector<std::string>& tokens, const Tokenizer& tokenizer,
                                const Annotator* annotator, const KnowledgeBase* kb,
                                std::size_t max_len) {
  if (annotator == nullptr || kb == nullptr) return tokenizer.encode_words(tokens, max_len);
  return tokenizer.encode_document(annotator->annotate(tokens), kb, max_len);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::derive(seed, {0xf17e, static_cast<std::uint64_t>(epoch)}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
