#include "kebio/cli/checkpoint.hpp"

#include <sstream>

#include "kebio/cli/run_config.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + '\n';
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::int64_t parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("checkpoint field '") + what + "' is not an integer");
  }
}

}  // namespace

const Tensor* Checkpoint::parameter(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return &p.tensor;
  }
  return nullptr;
}

Checkpoint make_checkpoint(const KebioModel& model, const Vocabulary& vocab,
                           const Tensor& entity_table, std::uint64_t kb_digest) {
  Checkpoint c;
  c.encoder = model.config();
  c.vocab = vocab;
  c.parameters = model.parameters();
  if (entity_table.defined()) c.parameters.push_back({std::string(kEntityTableName), entity_table});
  c.kb_digest = kb_digest;
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Container c;
  c.kind = ContainerKind::kCheckpoint;
  c.config_digest = config_digest(ckpt.encoder);
  c.kb_digest = ckpt.kb_digest;
  c.metadata = {{"encoder", encoder_config_json(ckpt.encoder)},
                {"vocab", join_lines(ckpt.vocab.pieces())},
                {"step", std::to_string(ckpt.step)},
                {"optimizer_steps", std::to_string(ckpt.optimizer_steps)},
                {"run_config", ckpt.run_config}};
  c.tensors = ckpt.parameters;
  for (const auto& s : ckpt.optimizer_state) c.tensors.push_back(s);
  write_container(path, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path);
  if (c.kind != ContainerKind::kCheckpoint) {
    throw DataError(path.string() + " is not a model checkpoint (it holds an embedding table?)");
  }
  Checkpoint ckpt;
  ckpt.encoder = encoder_config_from_json(c.require_meta("encoder"));
  if (config_digest(ckpt.encoder) != c.config_digest) {
    throw DataError(path.string() + ": config digest does not match the stored configuration");
  }
  ckpt.vocab = Vocabulary::from_lines(split_lines(c.require_meta("vocab")));
  ckpt.step = parse_int(c.require_meta("step"), "step");
  ckpt.optimizer_steps = parse_int(c.require_meta("optimizer_steps"), "optimizer_steps");
  if (const auto* rc = c.meta("run_config")) ckpt.run_config = *rc;
  ckpt.kb_digest = c.kb_digest;
  for (const auto& t : c.tensors) {
    (t.name.starts_with("adam.") ? ckpt.optimizer_state : ckpt.parameters).push_back(t);
  }
  if (ckpt.encoder.vocab_size != ckpt.vocab.size()) {
    throw DataError(path.string() + ": vocabulary has " + std::to_string(ckpt.vocab.size()) +
                    " pieces but the model expects " + std::to_string(ckpt.encoder.vocab_size));
  }
  return ckpt;
}

void copy_parameters(const std::vector<NamedTensor>& from, const std::vector<NamedTensor>& into) {
  for (const auto& dst : into) {
    const NamedTensor* src = nullptr;
    for (const auto& f : from) {
      if (f.name == dst.name) src = &f;
    }
    if (src == nullptr) throw DataError("checkpoint has no tensor '" + dst.name + "'");
    if (src->tensor.shape() != dst.tensor.shape()) {
      throw DataError("tensor '" + dst.name + "' has shape " + src->tensor.shape_string() +
                      " in the checkpoint but " + dst.tensor.shape_string() + " in the model");
    }
    Tensor t = dst.tensor;
    std::copy(src->tensor.data().begin(), src->tensor.data().end(), t.mutable_data().begin());
  }
}

KebioModel model_from_checkpoint(const Checkpoint& ckpt) {
  Rng rng(0);
  KebioModel model(ckpt.encoder, rng);
  copy_parameters(ckpt.parameters, model.parameters());
  return model;
}

void check_kb_digest(const Checkpoint& ckpt, const KnowledgeBase& kb, bool force) {
  if (ckpt.kb_digest != kb.order_digest() && !force) {
    throw DataError("knowledge base entity order differs from the one the checkpoint was "
                    "trained with; pass --force to use it anyway");
  }
}

void save_embeddings(const std::filesystem::path& path, const KnowledgeBase& kb,
                     const Tensor& relations, const std::vector<std::string>& relation_names) {
  Container c;
  c.kind = ContainerKind::kEmbeddings;
  c.kb_digest = kb.order_digest();
  c.metadata = {{"relations", join_lines(relation_names)}};
  c.tensors = {{std::string(kEntityTableName), kb.embeddings()}};
  if (relations.defined()) c.tensors.push_back({"relation_embeddings", relations});
  write_container(path, c);
}

void load_embeddings(const std::filesystem::path& path, KnowledgeBase& kb, bool force) {
  const Container c = read_container(path);
  if (c.kind != ContainerKind::kEmbeddings) {
    throw DataError(path.string() + " is not an embedding table (produced by `kebio train-transe`)");
  }
  if (c.kb_digest != kb.order_digest() && !force) {
    throw DataError(path.string() + " was trained on a knowledge base with a different entity "
                    "order; rerun `kebio train-transe` or pass --force");
  }
  const Tensor* t = c.tensor(kEntityTableName);
  if (t == nullptr) throw DataError(path.string() + " has no entity table");
  kb.set_embeddings(*t);
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
