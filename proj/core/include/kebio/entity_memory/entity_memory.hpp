#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kebio/ndmath/tensor.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct EncoderConfig;

/// Mention projection [2d x de] and fusion projection [de x d].
struct EntityMemoryParams {
  Tensor proj_mention_w, proj_mention_b;
  Tensor fuse_entity_w, fuse_entity_b;

  static EntityMemoryParams init(const EncoderConfig& config, Rng& rng);
  void collect(std::vector<NamedTensor>& out) const;
};

/// Boundary positions are inclusive wordpiece indices.
struct MentionSpan {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct MentionRepr {
  MentionSpan span;
  Tensor pooled;     // [1 x 2d]
  Tensor projected;  // [1 x de]
};

MentionRepr pool_and_project(const Tensor& h, MentionSpan span,
                             const EntityMemoryParams& params);

/// All mentions at once: pooled rows [m x 2d] and projections [m x de].
struct PooledMentions {
  Tensor pooled;
  Tensor projected;
};
PooledMentions pool_and_project_all(const Tensor& h, std::span<const MentionSpan> spans,
                                    const EntityMemoryParams& params);

/// Row indices of the k largest dot products with `projected`, best first;
/// equal scores keep ascending index order. Values only, no gradient.
std::vector<std::size_t> retrieve_topk(std::span<const real> projected,
                                       const Tensor& table, std::size_t k);

struct RetrievalResult {
  std::vector<std::size_t> candidates;
  Tensor weights;  // [1 x k], softmax of candidate dot products
  Tensor summary;  // [1 x de] = weights . E[candidates]
};

RetrievalResult attend(const Tensor& projected, std::span<const std::size_t> candidates,
                       const Tensor& table);

/// Span [begin, end) of rows that receive W_e summary + b_e.
struct FusionSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  Tensor summary;  // [1 x de]
};

/// h* from h. Rows outside every span are the input rows unchanged; with no
/// spans the input handle itself is returned. Spans must be disjoint.
Tensor fuse(const Tensor& h, std::vector<FusionSpan> spans, const EntityMemoryParams& params);

}  // namespace kebio::inline KEBIO_PRECISION_NS
