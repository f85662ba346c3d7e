#include "kebio/pretrain/masking.hpp"

#include <cmath>

#include "kebio/model.hpp"
#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

void PretrainConfig::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
    }
  };
  rate(select_rate, "select_rate");
  rate(mask_share, "mask_share");
  rate(random_share, "random_share");
  rate(keep_share, "keep_share");
  if (std::abs(mask_share + random_share + keep_share - 1.0) > 1e-9) {
    throw ConfigError("mask_share + random_share + keep_share must sum to 1");
  }
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (warmup_steps < 0 || total_steps < 1) {
    throw ConfigError("warmup_steps must be >= 0 and total_steps >= 1");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
}

std::vector<PieceMention> truncate_mentions(const std::vector<PieceMention>& mentions,
                                            std::size_t max_entities) {
  std::vector<PieceMention> out;
  std::size_t linked = 0;
  for (const auto& m : mentions) {
    if (m.entity != kNilEntity) {
      if (linked == max_entities) continue;
      ++linked;
    }
    out.push_back(m);
  }
  return out;
}

std::vector<int> bio_labels(const TokenizedInput& input) {
  const auto special = special_positions(input);
  std::vector<int> labels(input.ids.size(), kTagO);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (special[i]) labels[i] = nd::kIgnoreIndex;
  }
  for (const auto& m : input.mentions) {
    for (std::size_t p = m.begin; p < m.end; ++p) labels[p] = p == m.begin ? kTagB : kTagI;
  }
  return labels;
}

MaskedBatch mask_sequence(const TokenizedInput& input, const PretrainConfig& config,
                          std::size_t vocab_size, Rng& rng) {
  MaskedBatch out;
  out.input = input;
  out.input.mentions = truncate_mentions(input.mentions, config.max_entities);
  out.bio_labels = bio_labels(out.input);
  const std::size_t n = input.ids.size();
  out.mlm_labels.assign(n, nd::kIgnoreIndex);
  out.treatment.assign(n, Treatment::kNone);

  std::vector<std::uint8_t> covered(n, 0);
  if (config.whole_entity_masking) {
    for (const auto& m : out.input.mentions) {
      out.units.emplace_back(m.begin, m.end);
      for (std::size_t p = m.begin; p < m.end; ++p) covered[p] = 1;
    }
  }
  for (const auto& [b, e] : input.words) {
    if (b == e) continue;
    bool inside = false;
    for (std::size_t p = b; p < e; ++p) inside = inside || covered[p];
    if (!inside) out.units.emplace_back(b, e);
  }

  const auto first_random = static_cast<std::size_t>(Vocabulary::kNumReserved);
  const bool can_randomize = vocab_size > first_random;
  for (const auto& [b, e] : out.units) {
    if (!(rng.uniform() < config.select_rate)) continue;
    const double u = rng.uniform();
    Treatment t = Treatment::kKeep;
    if (u < config.mask_share) {
      t = Treatment::kMask;
    } else if (u < config.mask_share + config.random_share) {
      t = Treatment::kRandom;
    }
    for (std::size_t p = b; p < e; ++p) {
      out.mlm_labels[p] = input.ids[p];
      out.treatment[p] = t;
      if (t == Treatment::kMask) {
        out.input.ids[p] = Vocabulary::kMask;
      } else if (t == Treatment::kRandom && can_randomize) {
        out.input.ids[p] = static_cast<int>(first_random + rng.below(vocab_size - first_random));
      }
    }
  }
  return out;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
