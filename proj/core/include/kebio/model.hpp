#pragma once

#include <optional>
#include <vector>

#include "kebio/encoder/tokenizer.hpp"
#include "kebio/encoder/transformer.hpp"
#include "kebio/entity_memory/entity_memory.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// BIO tag ids used by the detection head and the NER task.
enum BioTag : int { kTagO = 0, kTagB = 1, kTagI = 2 };
inline constexpr int kNumBioTags = 3;

/// Spans (half-open, over positions) read off a tag sequence. An I that does
/// not continue a span opens a new one. Positions with `ignore` set never
/// belong to a span.
std::vector<std::pair<std::size_t, std::size_t>> decode_bio_spans(
    std::span<const int> tags, std::span<const std::uint8_t> ignore = {});

enum class FusionSource {
  kGold,     // linked mentions of the input; NIL mentions are not fused
  kDecoded,  // spans decoded from the detection head
  kNone,
};

struct ForwardResult {
  Tensor h0;      // group-0 states [n x d]
  Tensor fused;   // h* [n x d]
  Tensor final;   // group-1 states [n x d]
  Tensor bio_logits;  // [n x 3], from h0
  /// Projections of input.mentions in order [m x de]; undefined when there
  /// are no mentions or the entity memory is off.
  Tensor mention_projections;
  std::vector<PieceMention> fused_mentions;
  std::vector<RetrievalResult> retrievals;
};

/// Encoder, entity memory and the detection head. The entity table lives in
/// the knowledge base and is passed to forward().
class KebioModel {
 public:
  KebioModel() = default;
  KebioModel(const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const { return encoder.config(); }

  ForwardResult forward(const TokenizedInput& input, const Tensor& entity_table,
                        FusionSource source = FusionSource::kGold) const;

  /// Plain masked-LM path (group-0 then group-1 with no fusion).
  Tensor plain_mlm_logits(const TokenizedInput& input) const;

  /// Every trainable tensor with a stable name; the entity table is excluded.
  std::vector<NamedTensor> parameters() const;

  Encoder encoder;
  EntityMemoryParams memory;
  Tensor bio_w, bio_b;
};

/// Positions that carry no detection label: [CLS], [SEP] and padding.
std::vector<std::uint8_t> special_positions(const TokenizedInput& input);

}  // namespace kebio::inline KEBIO_PRECISION_NS
