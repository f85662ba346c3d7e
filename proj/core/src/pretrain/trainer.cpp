#include "kebio/pretrain/trainer.hpp"

#include <cmath>
#include <numeric>

#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {
bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

std::vector<OptimParam> optim_params(const KebioModel& model, const Tensor& entity_table) {
  std::vector<OptimParam> out;
  for (auto& p : model.parameters()) {
    const bool decay = ends_with(p.name, ".weight");
    out.push_back({p.name, p.tensor, decay});
  }
  if (entity_table.defined() && entity_table.requires_grad()) {
    out.push_back({"entity_embeddings", entity_table, false});
  }
  return out;
}

Pretrainer::Pretrainer(KebioModel& model, KnowledgeBase& kb, std::vector<TokenizedInput> corpus,
                       PretrainConfig config)
    : model_(&model),
      kb_(&kb),
      corpus_(std::move(corpus)),
      config_(config),
      schedule_(config.lr, config.warmup_steps, config.total_steps) {
  config_.validate();
  if (corpus_.empty()) throw UsageError("pretrain: empty corpus");
  if (model.config().use_entity_memory && kb.empty()) {
    throw UsageError("pretrain: the entity memory needs a non-empty knowledge base");
  }
  if (!kb.empty() && kb.entity_dim() != model.config().entity_dim) {
    throw ConfigError("pretrain: entity table width " + std::to_string(kb.entity_dim()) +
                      " differs from entity_dim " + std::to_string(model.config().entity_dim));
  }
  if (kb.embeddings().defined()) kb.embeddings().set_requires_grad(!config_.freeze_entity_embeddings);
  AdamWOptions opts;
  opts.beta1 = config_.adam_beta1;
  opts.beta2 = config_.adam_beta2;
  opts.eps = config_.adam_eps;
  opts.weight_decay = config_.weight_decay;
  optim_ = std::make_unique<AdamW>(optim_params(model, kb.embeddings()), opts);
}

std::vector<MaskedBatch> Pretrainer::batch_for_step(std::int64_t step) const {
  const std::size_t n = corpus_.size();
  const std::size_t bs = config_.batch_size;
  std::vector<MaskedBatch> batch;
  std::int64_t cached_epoch = -1;
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < bs; ++j) {
    const std::size_t global = static_cast<std::size_t>(step) * bs + j;
    const auto epoch = static_cast<std::int64_t>(global / n);
    if (epoch != cached_epoch) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng shuffle(Rng::derive(config_.seed, {0x5eed, static_cast<std::uint64_t>(epoch)}));
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[shuffle.below(i)]);
      cached_epoch = epoch;
    }
    const std::size_t doc = perm[global % n];
    Rng rng(Rng::derive(config_.seed, {static_cast<std::uint64_t>(step), j, doc}));
    batch.push_back(mask_sequence(corpus_[doc], config_, model_->config().vocab_size, rng));
  }
  return batch;
}

LossReport Pretrainer::evaluate(std::span<const MaskedBatch> batch) const {
  const JointLoss loss = joint_loss(*model_, kb_->embeddings(), batch);
  LossReport r;
  r.step = step_;
  r.total = loss.total.item();
  r.mlm = loss.mlm.item();
  r.ed = loss.ed.item();
  r.el = loss.el.item();
  return r;
}

LossReport Pretrainer::train_step() {
  const auto batch = batch_for_step(step_);
  Tape tape;
  const JointLoss loss = joint_loss(*model_, kb_->embeddings(), batch);
  LossReport r;
  r.step = step_;
  r.total = loss.total.item();
  r.mlm = loss.mlm.item();
  r.ed = loss.ed.item();
  r.el = loss.el.item();
  if (!std::isfinite(r.total)) {
    throw NumericError("pretrain: non-finite loss at step " + std::to_string(step_) +
                       " (mlm=" + std::to_string(r.mlm) + ", ed=" + std::to_string(r.ed) +
                       ", el=" + std::to_string(r.el) + "); lower the learning rate");
  }
  optim_->zero_grad();
  if (loss.total.requires_grad()) tape.backward(loss.total);
  r.grad_norm = clip_grad_norm(optim_->params(), config_.grad_clip);
  r.lr = schedule_.at(step_);
  optim_->step(r.lr);
  ++step_;
  return r;
}

double Pretrainer::linking_accuracy() const {
  const Tensor& table = kb_->embeddings();
  std::size_t total = 0, correct = 0;
  for (const auto& input : corpus_) {
    const auto mentions = truncate_mentions(input.mentions, config_.max_entities);
    bool any = false;
    for (const auto& m : mentions) any = any || m.entity != kNilEntity;
    if (!any) continue;
    TokenizedInput view = input;
    view.mentions = mentions;
    const ForwardResult fwd = model_->forward(view, table, FusionSource::kGold);
    if (!fwd.mention_projections.defined()) continue;
    const Tensor scores = nd::matmul(fwd.mention_projections, nd::transpose(table));
    const std::size_t e = scores.cols();
    const auto s = scores.data();
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      if (mentions[i].entity == kNilEntity) continue;
      std::size_t best = 0;
      for (std::size_t j = 1; j < e; ++j) {
        if (s[i * e + j] > s[i * e + best]) best = j;
      }
      ++total;
      correct += static_cast<int>(best) == mentions[i].entity;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
