#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "kebio/encoder/transformer.hpp"
#include "kebio/pretrain/masking.hpp"
#include "kebio/tasks/finetune.hpp"
#include "kebio/transe/transe.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct PathsConfig {
  std::string kb_dir;
  std::string raw_text;  // one sentence per line, input of the annotate stage
  std::string ner_train, ner_dev, ner_test;
  std::string re_train, re_dev, re_test;
  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

struct ProbeConfig {
  std::size_t beam = 5;
  std::size_t max_len = 10;
  std::size_t max_per_relation = 200;
  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

/// Everything a run needs. `seed` is the only seed; resolve() copies it into
/// the stage configs.
struct RunConfig {
  EncoderConfig encoder;  // vocab_size 0 = size of the built vocabulary
  PretrainConfig pretrain;
  TranseConfig transe;
  FinetuneConfig finetune;
  ProbeConfig probe;
  PathsConfig paths;
  std::size_t vocab_size = 1000;  // target of the vocabulary builder
  double annotate_threshold = 0.85;
  std::int64_t steps = 0;  // pretraining stops here; 0 = pretrain.total_steps
  std::string re_negative_label = "false";
  std::uint64_t seed = 0;

  void resolve();
  void validate() const;
  std::int64_t stop_step() const { return steps > 0 ? steps : pretrain.total_steps; }
};

std::string to_json(const RunConfig& config);
/// Strict: unknown keys and wrong types are ConfigErrors naming the key.
RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string encoder_config_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(std::string_view text);

/// Digest of the canonical JSON of the encoder configuration.
std::uint64_t config_digest(const EncoderConfig& config);

}  // namespace kebio::inline KEBIO_PRECISION_NS
