#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kebio/tasks/finetune.hpp"
#include "kebio/tasks/metrics.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct ReExample {
  std::vector<std::string> tokens;
  Span span1, span2;  // [begin, end) over tokens
  std::string indicator1, indicator2;  // e.g. "@CHEMICAL$"
  std::string label;
};

struct IndicatorSequence {
  std::vector<std::string> tokens;
  std::size_t pos1 = 0;  // token offset of indicator1
  std::size_t pos2 = 0;
};

/// Each span collapses to its indicator token; every other token is kept in
/// order. Overlapping or out-of-range spans are DataErrors.
IndicatorSequence replace_with_indicators(const ReExample& ex);

/// JSONL records: tokens, span1 [s, e], span2 [s, e], indicator1, indicator2, label.
std::vector<ReExample> read_re_jsonl(const std::filesystem::path& path);

struct ReHead {
  Tensor w, b;  // [2d x C], [C]
  static ReHead init(std::size_t hidden_dim, std::size_t classes, double init_std, Rng& rng);
  std::vector<NamedTensor> parameters() const;
};

/// logits [1 x C] = [h_p1 ; h_p2] . W + b
Tensor classify_relation(const Tensor& final_states, std::size_t pos1, std::size_t pos2,
                         const ReHead& head);

struct ReResult {
  double best_dev_score = 0;  // micro-F1 over positive classes
  double train_accuracy = 0;
  int best_epoch = -1;
  double best_lr = 0;
};

/// Sentence-level relation classifier over indicator states. Label ids follow
/// `labels`; `negative_label` (may be absent from the label set) is excluded
/// from micro-F1.
class RelationClassifier {
 public:
  RelationClassifier(KebioModel& model, Tokenizer& tokenizer, const KnowledgeBase* kb,
                     std::vector<std::string> labels, std::string negative_label,
                     FinetuneConfig config);

  /// Registers indicator tokens of `examples` in the vocabulary and grows the
  /// token embeddings to match.
  void register_indicators(const std::vector<ReExample>& examples);

  ReResult fit(const std::vector<ReExample>& train, const std::vector<ReExample>& dev);
  int predict(const ReExample& ex) const;
  std::vector<int> predict_all(const std::vector<ReExample>& data) const;
  int label_id(const std::string& label) const;
  Prf evaluate(const std::vector<ReExample>& data) const;
  double accuracy_on(const std::vector<ReExample>& data) const;

  const std::vector<std::string>& labels() const { return labels_; }

 private:
  struct Encoded {
    TokenizedInput input;
    std::size_t p1 = 0, p2 = 0;
    int label = 0;
  };
  Encoded encode(const ReExample& ex) const;
  Tensor logits(const Encoded& e) const;
  std::vector<NamedTensor> all_parameters() const;

  KebioModel* model_;
  Tokenizer* tokenizer_;
  const KnowledgeBase* kb_;
  std::vector<std::string> labels_;
  std::string negative_label_;
  FinetuneConfig config_;
  std::optional<Annotator> annotator_;
  ReHead head_;
};

}  // namespace kebio::inline KEBIO_PRECISION_NS
