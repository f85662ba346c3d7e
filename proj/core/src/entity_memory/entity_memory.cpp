#include "kebio/entity_memory/entity_memory.hpp"

#include <algorithm>
#include <numeric>

#include "kebio/encoder/transformer.hpp"
#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

EntityMemoryParams EntityMemoryParams::init(const EncoderConfig& c, Rng& rng) {
  EntityMemoryParams p;
  p.proj_mention_w = init_normal({2 * c.hidden_dim, c.entity_dim}, c.init_std, rng);
  p.proj_mention_b = Tensor::zeros({c.entity_dim}, true);
  p.fuse_entity_w = init_normal({c.entity_dim, c.hidden_dim}, c.init_std, rng);
  p.fuse_entity_b = Tensor::zeros({c.hidden_dim}, true);
  return p;
}

void EntityMemoryParams::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"proj_mention.weight", proj_mention_w});
  out.push_back({"proj_mention.bias", proj_mention_b});
  out.push_back({"fuse_entity.weight", fuse_entity_w});
  out.push_back({"fuse_entity.bias", fuse_entity_b});
}

namespace {
void check_span(const Tensor& h, MentionSpan s) {
  if (s.first > s.last || s.last >= h.rows()) {
    throw IndexError("mention span [" + std::to_string(s.first) + ", " +
                     std::to_string(s.last) + "] outside sequence of length " +
                     std::to_string(h.rows()));
  }
}
}  // namespace

PooledMentions pool_and_project_all(const Tensor& h, std::span<const MentionSpan> spans,
                                    const EntityMemoryParams& params) {
  if (spans.empty()) throw UsageError("pool_and_project_all: no mentions");
  std::vector<int> firsts, lasts;
  for (const auto& s : spans) {
    check_span(h, s);
    firsts.push_back(static_cast<int>(s.first));
    lasts.push_back(static_cast<int>(s.last));
  }
  const Tensor parts[] = {nd::gather_rows(h, firsts), nd::gather_rows(h, lasts)};
  PooledMentions out;
  out.pooled = nd::concat(parts, 1);
  out.projected = nd::add(nd::matmul(out.pooled, params.proj_mention_w), params.proj_mention_b);
  return out;
}

MentionRepr pool_and_project(const Tensor& h, MentionSpan span,
                             const EntityMemoryParams& params) {
  auto all = pool_and_project_all(h, std::span<const MentionSpan>(&span, 1), params);
  return {span, all.pooled, all.projected};
}

std::vector<std::size_t> retrieve_topk(std::span<const real> projected, const Tensor& table,
                                       std::size_t k) {
  if (!table.defined() || table.size() == 0 || table.rows() == 0) {
    throw UsageError("retrieve_topk: entity table is empty; load or train embeddings first");
  }
  if (k == 0) throw UsageError("retrieve_topk: k must be >= 1");
  const std::size_t n = table.rows(), de = table.cols();
  if (projected.size() != de) {
    throw DimensionError("retrieve_topk: projection width " + std::to_string(projected.size()) +
                         " does not match entity dim " + std::to_string(de));
  }
  const auto tv = table.data();
  std::vector<double> scores(n);
  for (std::size_t e = 0; e < n; ++e) {
    double s = 0;
    for (std::size_t j = 0; j < de; ++j) s += double(projected[j]) * tv[e * de + j];
    scores[e] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min(k, n);
  auto better = [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), better);
  order.resize(keep);
  return order;
}

RetrievalResult attend(const Tensor& projected, std::span<const std::size_t> candidates,
                       const Tensor& table) {
  if (candidates.empty()) throw UsageError("attend: no candidates");
  std::vector<int> ids(candidates.begin(), candidates.end());
  const Tensor rows = nd::gather_rows(table, ids);
  RetrievalResult r;
  r.candidates.assign(candidates.begin(), candidates.end());
  r.weights = nd::softmax(nd::matmul(projected, nd::transpose(rows)), 1);
  r.summary = nd::matmul(r.weights, rows);
  return r;
}

Tensor fuse(const Tensor& h, std::vector<FusionSpan> spans, const EntityMemoryParams& params) {
  if (spans.empty()) return h;
  std::sort(spans.begin(), spans.end(),
            [](const FusionSpan& a, const FusionSpan& b) { return a.begin < b.begin; });
  const std::size_t n = h.rows();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].begin >= spans[i].end || spans[i].end > n) {
      throw IndexError("fuse: span [" + std::to_string(spans[i].begin) + ", " +
                       std::to_string(spans[i].end) + ") outside sequence of length " +
                       std::to_string(n));
    }
    if (i > 0 && spans[i].begin < spans[i - 1].end) {
      throw DataError("fuse: mention spans overlap at position " +
                      std::to_string(spans[i].begin));
    }
  }
  std::vector<Tensor> pieces;
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    if (s.begin > cursor) pieces.push_back(nd::slice(h, 0, cursor, s.begin));
    const Tensor delta =
        nd::add(nd::matmul(s.summary, params.fuse_entity_w), params.fuse_entity_b);
    pieces.push_back(nd::add(nd::slice(h, 0, s.begin, s.end), delta));
    cursor = s.end;
  }
  if (cursor < n) pieces.push_back(nd::slice(h, 0, cursor, n));
  return nd::concat(pieces, 0);
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
