#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kebio/tasks/finetune.hpp"
#include "kebio/tasks/metrics.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// Words with one BIO tag each (entity types dropped).
struct NerExample {
  std::vector<std::string> tokens;
  std::vector<int> tags;
};

/// An I that does not continue a span becomes B.
std::vector<int> repair_bio(std::vector<int> tags);

/// "O", "B", "I", optionally typed ("B-Chemical"); anything else is a DataError.
int parse_bio_tag(std::string_view tag);

/// Two whitespace-separated columns per line (token, tag); blank lines end a
/// sentence. Tags are repaired on load.
std::vector<NerExample> read_conll(const std::filesystem::path& path);

/// Spans [begin, end) over words.
std::vector<Span> tags_to_spans(std::span<const int> tags);

struct NerHead {
  Tensor w, b;  // [d x 3], [3]
  static NerHead init(std::size_t hidden_dim, double init_std, Rng& rng);
  std::vector<NamedTensor> parameters() const;
};

struct NerResult {
  double best_dev_f1 = 0;
  int best_epoch = -1;
  double best_lr = 0;
  std::vector<double> dev_f1;  // per epoch of the selected learning rate
};

/// Linear BIO head over the final states; fine-tunes encoder and head in place.
class NerTagger {
 public:
  NerTagger(KebioModel& model, const Tokenizer& tokenizer, const KnowledgeBase* kb,
            FinetuneConfig config);

  /// Trains on `train`, evaluates on `dev` after each epoch and leaves the
  /// best-dev parameters in place.
  NerResult fit(const std::vector<NerExample>& train, const std::vector<NerExample>& dev);

  std::vector<int> predict(const std::vector<std::string>& tokens) const;
  Prf evaluate(const std::vector<NerExample>& data) const;

  NerHead& head() { return head_; }

 private:
  struct Encoded {
    TokenizedInput input;
    std::vector<int> piece_labels;
  };
  Encoded encode(const NerExample& ex) const;
  Tensor logits(const TokenizedInput& input) const;
  std::vector<NamedTensor> all_parameters() const;
  double train_once(double lr, const std::vector<Encoded>& train,
                    const std::vector<NerExample>& dev, std::vector<double>& dev_f1, int& best_epoch);

  KebioModel* model_;
  const Tokenizer* tokenizer_;
  const KnowledgeBase* kb_;
  FinetuneConfig config_;
  std::optional<Annotator> annotator_;
  NerHead head_;
};

}  // namespace kebio::inline KEBIO_PRECISION_NS
