#include "kebio/probe/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "kebio/encoder/vocab.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

std::vector<std::vector<double>> ModelScorer::log_probs(std::span<const int> ids,
                                                        std::span<const std::size_t> positions) const {
  TokenizedInput input;
  input.ids.assign(ids.begin(), ids.end());
  input.attention_mask.assign(ids.size(), 1);
  const bool fuse = model_->config().use_entity_memory && table_.defined() && table_.rows() > 0;
  const ForwardResult fwd =
      model_->forward(input, table_, fuse ? FusionSource::kDecoded : FusionSource::kNone);
  const Tensor logits = model_->encoder.mlm_logits(fwd.final);
  const std::size_t v = logits.cols();
  const auto data = logits.data();
  std::vector<std::vector<double>> out;
  for (std::size_t p : positions) {
    if (p >= ids.size()) throw IndexError("ModelScorer: position out of range");
    const real* row = data.data() + p * v;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < v; ++j) mx = std::max(mx, double(row[j]));
    double z = 0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(double(row[j]) - mx);
    const double lz = mx + std::log(z);
    std::vector<double> lp(v);
    for (std::size_t j = 0; j < v; ++j) lp[j] = double(row[j]) - lz;
    out.push_back(std::move(lp));
  }
  return out;
}

std::vector<std::size_t> mask_positions(std::span<const int> ids) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kMask) out.push_back(i);
  }
  if (out.empty() || out.size() > kMaxMaskLength) {
    throw UsageError("decode: expected 1.." + std::to_string(kMaxMaskLength) +
                     " [MASK] tokens, found " + std::to_string(out.size()));
  }
  return out;
}

namespace {

bool fillable(std::size_t token) { return !Vocabulary::is_reserved(static_cast<int>(token)); }

struct BeamState {
  std::vector<int> ids;
  std::vector<std::uint8_t> done;  // per mask index
  DecodeCandidate cand;
};

struct Expansion {
  double score;
  std::size_t state;
  std::size_t mask;
  std::size_t token;
  double lp;
};

bool better(const Expansion& a, const Expansion& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.state != b.state) return a.state < b.state;
  if (a.mask != b.mask) return a.mask < b.mask;
  return a.token < b.token;
}

}  // namespace

std::vector<int> decode_confidence(const MaskScorer& scorer, std::vector<int> ids) {
  const auto masks = mask_positions(ids);
  std::vector<int> fill(masks.size(), Vocabulary::kMask);
  std::vector<std::uint8_t> done(masks.size(), 0);
  for (std::size_t iter = 0; iter < masks.size(); ++iter) {
    std::vector<std::size_t> open, positions;
    for (std::size_t m = 0; m < masks.size(); ++m) {
      if (!done[m]) {
        open.push_back(m);
        positions.push_back(masks[m]);
      }
    }
    const auto lps = scorer.log_probs(ids, positions);
    double best_lp = -std::numeric_limits<double>::infinity();
    std::size_t best_mask = open.front();
    int best_token = -1;
    for (std::size_t i = 0; i < open.size(); ++i) {
      for (std::size_t t = 0; t < lps[i].size(); ++t) {
        if (!fillable(t)) continue;
        // Equal probabilities: the later position wins, then the lower id.
        if (lps[i][t] > best_lp || (lps[i][t] == best_lp && open[i] > best_mask)) {
          best_lp = lps[i][t];
          best_mask = open[i];
          best_token = static_cast<int>(t);
        }
      }
    }
    if (best_token < 0) throw UsageError("decode: vocabulary has no fillable tokens");
    done[best_mask] = 1;
    fill[best_mask] = best_token;
    ids[masks[best_mask]] = best_token;
  }
  return fill;
}

std::vector<DecodeCandidate> decode_beam(const MaskScorer& scorer, std::vector<int> ids,
                                         std::size_t beam) {
  if (beam == 0) throw UsageError("decode: beam width must be >= 1");
  const auto masks = mask_positions(ids);
  std::vector<BeamState> states(1);
  states[0].ids = std::move(ids);
  states[0].done.assign(masks.size(), 0);
  states[0].cand.fill.assign(masks.size(), Vocabulary::kMask);

  for (std::size_t iter = 0; iter < masks.size(); ++iter) {
    std::vector<Expansion> pool;
    for (std::size_t s = 0; s < states.size(); ++s) {
      std::vector<std::size_t> open, positions;
      for (std::size_t m = 0; m < masks.size(); ++m) {
        if (!states[s].done[m]) {
          open.push_back(m);
          positions.push_back(masks[m]);
        }
      }
      const auto lps = scorer.log_probs(states[s].ids, positions);
      // The best `beam` expansions of one parent are all distinct states, so
      // the global top-`beam` after merging is drawn from these.
      std::vector<Expansion> local;
      for (std::size_t i = 0; i < open.size(); ++i) {
        for (std::size_t t = 0; t < lps[i].size(); ++t) {
          if (!fillable(t)) continue;
          local.push_back({states[s].cand.score + lps[i][t], s, open[i], t, lps[i][t]});
        }
      }
      const std::size_t keep = std::min(beam, local.size());
      std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep),
                        local.end(), better);
      pool.insert(pool.end(), local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(pool.begin(), pool.end(), better);
    std::vector<BeamState> next;
    std::map<std::vector<int>, std::size_t> seen;
    for (const auto& e : pool) {
      if (next.size() == beam) break;
      BeamState st = states[e.state];
      st.ids[masks[e.mask]] = static_cast<int>(e.token);
      if (seen.count(st.ids)) continue;  // pool is sorted: first copy has the max score
      st.done[e.mask] = 1;
      st.cand.fill[e.mask] = static_cast<int>(e.token);
      st.cand.score = e.score;
      st.cand.step_log_probs.push_back(e.lp);
      st.cand.order.push_back(e.mask);
      seen.emplace(st.ids, next.size());
      next.push_back(std::move(st));
    }
    if (next.empty()) throw UsageError("decode: vocabulary has no fillable tokens");
    states = std::move(next);
  }
  std::vector<DecodeCandidate> out;
  for (auto& s : states) out.push_back(std::move(s.cand));
  return out;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
