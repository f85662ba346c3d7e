#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kebio/cli/container.hpp"
#include "kebio/encoder/vocab.hpp"
#include "kebio/kbase/knowledge_base.hpp"
#include "kebio/model.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr std::string_view kEntityTableName = "entity_embeddings";

/// Model parameters, entity table, vocabulary and (optionally) optimizer
/// state of a training run.
struct Checkpoint {
  EncoderConfig encoder;
  Vocabulary vocab;
  std::vector<NamedTensor> parameters;  // model tensors, then the entity table
  std::vector<NamedTensor> optimizer_state;
  std::int64_t optimizer_steps = 0;
  std::int64_t step = 0;
  std::uint64_t kb_digest = 0;
  std::string run_config;  // resolved config JSON, informational

  const Tensor* parameter(std::string_view name) const;
};

Checkpoint make_checkpoint(const KebioModel& model, const Vocabulary& vocab,
                           const Tensor& entity_table, std::uint64_t kb_digest);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds the model described by the checkpoint and copies every parameter.
KebioModel model_from_checkpoint(const Checkpoint& ckpt);

/// Copies values by name; missing names or shape mismatches are DataErrors.
void copy_parameters(const std::vector<NamedTensor>& from, const std::vector<NamedTensor>& into);

/// Refuses a KB whose entity order differs from the one the checkpoint was
/// trained against, unless `force`.
void check_kb_digest(const Checkpoint& ckpt, const KnowledgeBase& kb, bool force);

/// Entity table container written by train-transe.
void save_embeddings(const std::filesystem::path& path, const KnowledgeBase& kb,
                     const Tensor& relations, const std::vector<std::string>& relation_names);
/// Loads the table into kb after checking the entity order digest.
void load_embeddings(const std::filesystem::path& path, KnowledgeBase& kb, bool force = false);

}  // namespace kebio::inline KEBIO_PRECISION_NS
