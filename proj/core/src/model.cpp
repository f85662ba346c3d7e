#include "kebio/model.hpp"

#include "kebio/encoder/vocab.hpp"
#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

std::vector<std::pair<std::size_t, std::size_t>> decode_bio_spans(
    std::span<const int> tags, std::span<const std::uint8_t> ignore) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const bool skip = !ignore.empty() && ignore[i];
    const int t = skip ? kTagO : tags[i];
    if (t == kTagB || (t == kTagI && !open)) {
      spans.emplace_back(i, i + 1);
      open = true;
    } else if (t == kTagI) {
      spans.back().second = i + 1;
    } else {
      open = false;
    }
  }
  return spans;
}

std::vector<std::uint8_t> special_positions(const TokenizedInput& input) {
  std::vector<std::uint8_t> out(input.ids.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int id = input.ids[i];
    const bool pad = i < input.attention_mask.size() && !input.attention_mask[i];
    out[i] = pad || id == Vocabulary::kCls || id == Vocabulary::kSep || id == Vocabulary::kPad;
  }
  return out;
}

KebioModel::KebioModel(const EncoderConfig& config, Rng& rng) : encoder(config, rng) {
  memory = EntityMemoryParams::init(config, rng);
  bio_w = init_normal({config.hidden_dim, kNumBioTags}, config.init_std, rng);
  bio_b = Tensor::zeros({kNumBioTags}, true);
}

std::vector<NamedTensor> KebioModel::parameters() const {
  std::vector<NamedTensor> out;
  encoder.collect(out);
  memory.collect(out);
  out.push_back({"head_bio.weight", bio_w});
  out.push_back({"head_bio.bias", bio_b});
  return out;
}

Tensor KebioModel::plain_mlm_logits(const TokenizedInput& input) const {
  const Tensor h = encoder.encode_group0(input.ids, input.attention_mask);
  return encoder.mlm_logits(encoder.encode_group1(h, input.attention_mask));
}

ForwardResult KebioModel::forward(const TokenizedInput& input, const Tensor& entity_table,
                                  FusionSource source) const {
  const auto& cfg = config();
  ForwardResult r;
  r.h0 = encoder.encode_group0(input.ids, input.attention_mask);
  r.bio_logits = nd::add(nd::matmul(r.h0, bio_w), bio_b);
  r.fused = r.h0;

  if (cfg.use_entity_memory && source != FusionSource::kNone) {
    std::vector<PieceMention> spans;
    if (source == FusionSource::kGold) {
      spans = input.mentions;
    } else {
      const std::size_t n = input.ids.size();
      std::vector<int> tags(n);
      const auto logits = r.bio_logits.data();
      for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        for (int c = 1; c < kNumBioTags; ++c) {
          if (logits[i * kNumBioTags + c] > logits[i * kNumBioTags + best]) best = c;
        }
        tags[i] = best;
      }
      for (auto [b, e] : decode_bio_spans(tags, special_positions(input))) {
        spans.push_back({b, e, kNilEntity});
      }
    }

    if (!spans.empty()) {
      std::vector<MentionSpan> bounds;
      for (const auto& m : spans) bounds.push_back({m.first(), m.last()});
      const PooledMentions pooled = pool_and_project_all(r.h0, bounds, memory);
      if (source == FusionSource::kGold) r.mention_projections = pooled.projected;

      std::vector<FusionSpan> fusion;
      for (std::size_t i = 0; i < spans.size(); ++i) {
        // Gold NIL mentions have no entity row to fuse.
        if (source == FusionSource::kGold && spans[i].entity == kNilEntity) continue;
        const Tensor proj = nd::slice(pooled.projected, 0, i, i + 1);
        auto cand = retrieve_topk(proj.data(), entity_table, cfg.k);
        RetrievalResult ret = attend(proj, cand, entity_table);
        fusion.push_back({spans[i].begin, spans[i].end, ret.summary});
        r.fused_mentions.push_back(spans[i]);
        r.retrievals.push_back(std::move(ret));
      }
      r.fused = fuse(r.h0, std::move(fusion), memory);
    }
  }
  r.final = encoder.encode_group1(r.fused, input.attention_mask);
  return r;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
