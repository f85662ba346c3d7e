#include "kebio/tasks/re.hpp"

#include <fstream>

#include "json.hpp"
#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

IndicatorSequence replace_with_indicators(const ReExample& ex) {
  const std::size_t n = ex.tokens.size();
  for (const Span& s : {ex.span1, ex.span2}) {
    if (s.first >= s.second || s.second > n) {
      throw DataError("relation span [" + std::to_string(s.first) + ", " +
                      std::to_string(s.second) + ") invalid for " + std::to_string(n) + " tokens");
    }
  }
  if (ex.span1.first < ex.span2.second && ex.span2.first < ex.span1.second) {
    throw DataError("relation spans overlap");
  }
  IndicatorSequence out;
  for (std::size_t i = 0; i < n;) {
    if (i == ex.span1.first) {
      out.pos1 = out.tokens.size();
      out.tokens.push_back(ex.indicator1);
      i = ex.span1.second;
    } else if (i == ex.span2.first) {
      out.pos2 = out.tokens.size();
      out.tokens.push_back(ex.indicator2);
      i = ex.span2.second;
    } else {
      out.tokens.push_back(ex.tokens[i++]);
    }
  }
  return out;
}

std::vector<ReExample> read_re_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open RE file " + path.string());
  std::vector<ReExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ReExample ex;
      ex.tokens = j.at("tokens").get<std::vector<std::string>>();
      const auto s1 = j.at("span1").get<std::vector<std::size_t>>();
      const auto s2 = j.at("span2").get<std::vector<std::size_t>>();
      if (s1.size() != 2 || s2.size() != 2) throw DataError("spans must be [start, end]");
      ex.span1 = {s1[0], s1[1]};
      ex.span2 = {s2[0], s2[1]};
      ex.indicator1 = j.at("indicator1").get<std::string>();
      ex.indicator2 = j.at("indicator2").get<std::string>();
      const auto& label = j.at("label");
      ex.label = label.is_string() ? label.get<std::string>() : label.dump();
      if (!looks_special(ex.indicator1) || !looks_special(ex.indicator2)) {
        throw DataError("indicators must look like @NAME$ or [NAME]");
      }
      replace_with_indicators(ex);  // validates spans
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ReHead ReHead::init(std::size_t hidden_dim, std::size_t classes, double init_std, Rng& rng) {
  return {init_normal({2 * hidden_dim, classes}, init_std, rng), Tensor::zeros({classes}, true)};
}

std::vector<NamedTensor> ReHead::parameters() const { return {{"re.weight", w}, {"re.bias", b}}; }

Tensor classify_relation(const Tensor& final_states, std::size_t pos1, std::size_t pos2,
                         const ReHead& head) {
  const int ids[] = {static_cast<int>(pos1), static_cast<int>(pos2)};
  const Tensor parts[] = {nd::gather_rows(final_states, std::span<const int>(ids, 1)),
                          nd::gather_rows(final_states, std::span<const int>(ids + 1, 1))};
  return nd::add(nd::matmul(nd::concat(parts, 1), head.w), head.b);
}

RelationClassifier::RelationClassifier(KebioModel& model, Tokenizer& tokenizer,
                                       const KnowledgeBase* kb, std::vector<std::string> labels,
                                       std::string negative_label, FinetuneConfig config)
    : model_(&model),
      tokenizer_(&tokenizer),
      kb_(kb),
      labels_(std::move(labels)),
      negative_label_(std::move(negative_label)),
      config_(config) {
  config_.validate();
  if (labels_.size() < 2) throw DataError("relation task needs at least two labels");
  if (config_.use_entity_memory && model.config().use_entity_memory && kb != nullptr && !kb->empty()) {
    annotator_.emplace(*kb, config_.annotate_threshold);
  }
  Rng rng(Rng::derive(config_.seed, {0x5245}));
  head_ = ReHead::init(model.config().hidden_dim, labels_.size(), model.config().init_std, rng);
}

void RelationClassifier::register_indicators(const std::vector<ReExample>& examples) {
  for (const auto& ex : examples) {
    tokenizer_->vocab().add_special(ex.indicator1);
    tokenizer_->vocab().add_special(ex.indicator2);
  }
  Rng rng(Rng::derive(config_.seed, {0x1d1c}));
  model_->encoder.resize_vocab(tokenizer_->vocab().size(), rng);
}

int RelationClassifier::label_id(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int>(i);
  }
  throw DataError("relation label '" + label + "' is not in the task's label set");
}

RelationClassifier::Encoded RelationClassifier::encode(const ReExample& ex) const {
  const IndicatorSequence seq = replace_with_indicators(ex);
  Encoded e;
  e.input = encode_task_text(seq.tokens, *tokenizer_, annotator_ ? &*annotator_ : nullptr, kb_,
                             std::min(config_.max_len, model_->config().max_seq_len));
  if (std::max(seq.pos1, seq.pos2) >= e.input.words.size()) {
    throw DataError("relation example truncated before its second indicator; raise max_len");
  }
  e.p1 = e.input.words[seq.pos1].first;
  e.p2 = e.input.words[seq.pos2].first;
  if (e.input.ids[e.p1] != tokenizer_->vocab().find(ex.indicator1).value_or(-1) ||
      e.input.ids[e.p2] != tokenizer_->vocab().find(ex.indicator2).value_or(-1)) {
    throw DataError("indicator token not registered in the vocabulary: " + ex.indicator1 + " / " +
                    ex.indicator2);
  }
  e.label = label_id(ex.label);
  return e;
}

Tensor RelationClassifier::logits(const Encoded& e) const {
  const FusionSource src = annotator_ ? FusionSource::kGold : FusionSource::kNone;
  const ForwardResult fwd = model_->forward(e.input, kb_ ? kb_->embeddings() : Tensor(), src);
  return classify_relation(fwd.final, e.p1, e.p2, head_);
}

std::vector<NamedTensor> RelationClassifier::all_parameters() const {
  auto params = model_->parameters();
  for (auto& p : head_.parameters()) params.push_back(p);
  return params;
}

int RelationClassifier::predict(const ReExample& ex) const {
  const Tensor lg = logits(encode(ex));
  const auto v = lg.data();
  int best = 0;
  for (std::size_t c = 1; c < v.size(); ++c) {
    if (v[c] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

std::vector<int> RelationClassifier::predict_all(const std::vector<ReExample>& data) const {
  std::vector<int> out;
  for (const auto& ex : data) out.push_back(predict(ex));
  return out;
}

Prf RelationClassifier::evaluate(const std::vector<ReExample>& data) const {
  std::vector<int> gold;
  for (const auto& ex : data) gold.push_back(label_id(ex.label));
  int negative = -1;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == negative_label_) negative = static_cast<int>(i);
  }
  return relation_micro_f1(predict_all(data), gold, negative);
}

double RelationClassifier::accuracy_on(const std::vector<ReExample>& data) const {
  std::vector<int> gold;
  for (const auto& ex : data) gold.push_back(label_id(ex.label));
  return accuracy(predict_all(data), gold);
}

ReResult RelationClassifier::fit(const std::vector<ReExample>& train,
                                 const std::vector<ReExample>& dev) {
  if (train.empty()) throw UsageError("finetune-re: empty training set");
  std::vector<Encoded> encoded;
  for (const auto& ex : train) encoded.push_back(encode(ex));
  const auto& select = dev.empty() ? train : dev;
  const ParamSnapshot initial(all_parameters());
  ReResult result;
  result.best_dev_score = -1;
  ParamSnapshot winner;
  for (double lr : learning_rates(config_)) {
    initial.restore(all_parameters());
    std::vector<OptimParam> params;
    for (const auto& p : all_parameters()) params.push_back({p.name, p.tensor, p.name.ends_with(".weight")});
    AdamWOptions opts;
    opts.weight_decay = config_.weight_decay;
    AdamW optim(params, opts);
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      const auto order = epoch_order(encoded.size(), config_.seed, epoch);
      for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config_.batch_size);
        Tape tape;
        std::vector<Tensor> rows;
        std::vector<int> labels;
        for (std::size_t i = start; i < stop; ++i) {
          rows.push_back(logits(encoded[order[i]]));
          labels.push_back(encoded[order[i]].label);
        }
        const Tensor loss = nd::cross_entropy_logits(nd::concat(rows, 0), labels);
        optim.zero_grad();
        tape.backward(loss);
        clip_grad_norm(optim.params(), config_.grad_clip);
        optim.step(lr);
      }
      // Ties prefer the later epoch: more training at equal dev score.
      const double score = evaluate(select).f1;
      if (score >= result.best_dev_score) {
        result.best_dev_score = score;
        result.best_epoch = epoch;
        result.best_lr = lr;
        winner = ParamSnapshot(all_parameters());
      }
    }
  }
  winner.restore(all_parameters());
  result.train_accuracy = accuracy_on(train);
  return result;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
