#pragma once

#include <cstdint>
#include <vector>

#include "kebio/encoder/tokenizer.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

enum class EntityInit { kTranse, kRandom };

struct PretrainConfig {
  double select_rate = 0.15;
  double mask_share = 0.80;
  double random_share = 0.10;
  double keep_share = 0.10;
  bool whole_entity_masking = true;
  EntityInit entity_init = EntityInit::kTranse;
  bool freeze_entity_embeddings = false;
  std::size_t max_entities = 50;

  double lr = 5e-5;
  std::int64_t warmup_steps = 100;
  std::int64_t total_steps = 1000;
  std::size_t batch_size = 8;
  double weight_decay = 0.01;
  double grad_clip = 1.0;  // <= 0 disables clipping
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

/// How a selected unit was treated.
enum class Treatment : std::uint8_t { kNone, kMask, kRandom, kKeep };

struct MaskedBatch {
  TokenizedInput input;           // ids after masking; mentions truncated
  std::vector<int> mlm_labels;    // original id on selected positions, else ignore
  std::vector<int> bio_labels;    // O/B/I, ignore on [CLS]/[SEP]/padding
  std::vector<Treatment> treatment;  // per position
  /// Unit ranges [begin, end) over positions; entity units first.
  std::vector<std::pair<std::size_t, std::size_t>> units;
};

/// Keeps at most `max_entities` linked mentions in document order; later
/// linked mentions are dropped, NIL mentions are kept.
std::vector<PieceMention> truncate_mentions(const std::vector<PieceMention>& mentions,
                                            std::size_t max_entities);

/// O/B/I per position from the mention spans; specials get the ignore index.
std::vector<int> bio_labels(const TokenizedInput& input);

/// Whole-word (and, when enabled, whole-entity) masking of one sequence.
/// Each unit is selected independently; a selected unit's pieces share one
/// treatment draw. Random replacements are drawn per piece from the
/// non-reserved ids.
MaskedBatch mask_sequence(const TokenizedInput& input, const PretrainConfig& config,
                          std::size_t vocab_size, Rng& rng);

}  // namespace kebio::inline KEBIO_PRECISION_NS
