#include "kebio/tasks/ner.hpp"

#include <fstream>
#include <sstream>

#include "kebio/ndmath/ops.hpp"
#include "kebio/pretrain/trainer.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

std::vector<int> repair_bio(std::vector<int> tags) {
  int prev = kTagO;
  for (int& t : tags) {
    if (t == kTagI && prev == kTagO) t = kTagB;
    prev = t;
  }
  return tags;
}

int parse_bio_tag(std::string_view tag) {
  if (tag == "O") return kTagO;
  if (!tag.empty() && (tag.size() == 1 || tag[1] == '-')) {
    if (tag[0] == 'B') return kTagB;
    if (tag[0] == 'I') return kTagI;
  }
  throw DataError("unknown BIO tag '" + std::string(tag) + "'");
}

std::vector<NerExample> read_conll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open NER file " + path.string());
  std::vector<NerExample> out;
  NerExample cur;
  auto flush = [&] {
    if (!cur.tokens.empty()) {
      cur.tags = repair_bio(std::move(cur.tags));
      out.push_back(std::move(cur));
    }
    cur = NerExample{};
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string token, tag, extra;
    if (!(fields >> token)) {
      flush();
      continue;
    }
    if (!(fields >> tag) || (fields >> extra)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected two columns (token, tag)");
    }
    try {
      cur.tags.push_back(parse_bio_tag(tag));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    cur.tokens.push_back(token);
  }
  flush();
  return out;
}

std::vector<Span> tags_to_spans(std::span<const int> tags) { return decode_bio_spans(tags); }

NerHead NerHead::init(std::size_t hidden_dim, double init_std, Rng& rng) {
  return {init_normal({hidden_dim, kNumBioTags}, init_std, rng), Tensor::zeros({kNumBioTags}, true)};
}

std::vector<NamedTensor> NerHead::parameters() const {
  return {{"ner.weight", w}, {"ner.bias", b}};
}

NerTagger::NerTagger(KebioModel& model, const Tokenizer& tokenizer, const KnowledgeBase* kb,
                     FinetuneConfig config)
    : model_(&model), tokenizer_(&tokenizer), kb_(kb), config_(config) {
  config_.validate();
  if (config_.use_entity_memory && model.config().use_entity_memory && kb != nullptr && !kb->empty()) {
    annotator_.emplace(*kb, config_.annotate_threshold);
  }
  Rng rng(Rng::derive(config_.seed, {0x4e52}));
  head_ = NerHead::init(model.config().hidden_dim, model.config().init_std, rng);
}

NerTagger::Encoded NerTagger::encode(const NerExample& ex) const {
  if (ex.tags.size() != ex.tokens.size()) {
    throw DataError("NER example has " + std::to_string(ex.tokens.size()) + " tokens but " +
                    std::to_string(ex.tags.size()) + " tags");
  }
  Encoded e;
  e.input = encode_task_text(ex.tokens, *tokenizer_, annotator_ ? &*annotator_ : nullptr, kb_,
                             std::min(config_.max_len, model_->config().max_seq_len));
  e.piece_labels.assign(e.input.ids.size(), nd::kIgnoreIndex);
  for (std::size_t w = 0; w < e.input.words.size(); ++w) {
    const auto [b, end] = e.input.words[w];
    if (b < end) e.piece_labels[b] = ex.tags[w];
  }
  return e;
}

Tensor NerTagger::logits(const TokenizedInput& input) const {
  const FusionSource src = annotator_ ? FusionSource::kGold : FusionSource::kNone;
  const ForwardResult fwd = model_->forward(input, kb_ ? kb_->embeddings() : Tensor(), src);
  return nd::add(nd::matmul(fwd.final, head_.w), head_.b);
}

std::vector<NamedTensor> NerTagger::all_parameters() const {
  auto params = model_->parameters();
  for (auto& p : head_.parameters()) params.push_back(p);
  return params;
}

std::vector<int> NerTagger::predict(const std::vector<std::string>& tokens) const {
  NerExample ex{tokens, std::vector<int>(tokens.size(), kTagO)};
  const Encoded e = encode(ex);
  const Tensor lg = logits(e.input);
  const auto v = lg.data();
  std::vector<int> tags(tokens.size(), kTagO);
  for (std::size_t w = 0; w < e.input.words.size(); ++w) {
    const auto [b, end] = e.input.words[w];
    if (b == end) continue;
    int best = 0;
    for (int c = 1; c < kNumBioTags; ++c) {
      if (v[b * kNumBioTags + c] > v[b * kNumBioTags + best]) best = c;
    }
    tags[w] = best;
  }
  return repair_bio(std::move(tags));
}

Prf NerTagger::evaluate(const std::vector<NerExample>& data) const {
  std::vector<std::vector<Span>> pred, gold;
  for (const auto& ex : data) {
    pred.push_back(tags_to_spans(predict(ex.tokens)));
    gold.push_back(tags_to_spans(ex.tags));
  }
  return entity_level_f1(pred, gold);
}

double NerTagger::train_once(double lr, const std::vector<Encoded>& train,
                             const std::vector<NerExample>& dev, std::vector<double>& dev_f1,
                             int& best_epoch) {
  std::vector<OptimParam> params;
  for (const auto& p : all_parameters()) {
    params.push_back({p.name, p.tensor, p.name.ends_with(".weight")});
  }
  AdamWOptions opts;
  opts.weight_decay = config_.weight_decay;
  AdamW optim(params, opts);
  double best = -1;
  ParamSnapshot best_params;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config_.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config_.batch_size);
      Tape tape;
      std::vector<Tensor> rows;
      std::vector<int> labels;
      for (std::size_t i = start; i < stop; ++i) {
        const Encoded& e = train[order[i]];
        rows.push_back(logits(e.input));
        labels.insert(labels.end(), e.piece_labels.begin(), e.piece_labels.end());
      }
      const Tensor loss = nd::cross_entropy_logits(nd::concat(rows, 0), labels);
      optim.zero_grad();
      if (loss.requires_grad()) tape.backward(loss);
      clip_grad_norm(optim.params(), config_.grad_clip);
      optim.step(lr);
    }
    const double f1 = evaluate(dev).f1;
    dev_f1.push_back(f1);
    if (f1 > best) {
      best = f1;
      best_epoch = epoch;
      best_params = ParamSnapshot(all_parameters());
    }
  }
  best_params.restore(all_parameters());
  return best;
}

NerResult NerTagger::fit(const std::vector<NerExample>& train, const std::vector<NerExample>& dev) {
  if (train.empty()) throw UsageError("finetune-ner: empty training set");
  std::vector<Encoded> encoded;
  for (const auto& ex : train) encoded.push_back(encode(ex));
  const ParamSnapshot initial(all_parameters());
  NerResult result;
  result.best_dev_f1 = -1;
  ParamSnapshot winner;
  for (double lr : learning_rates(config_)) {
    initial.restore(all_parameters());
    std::vector<double> curve;
    int epoch = -1;
    const double f1 = train_once(lr, encoded, dev.empty() ? train : dev, curve, epoch);
    if (f1 > result.best_dev_f1) {
      result = {f1, epoch, lr, curve};
      winner = ParamSnapshot(all_parameters());
    }
  }
  winner.restore(all_parameters());
  return result;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
