#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kebio/base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

using Span = std::pair<std::size_t, std::size_t>;  // [begin, end)

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

/// Precision/recall/F1 from counts. With no gold and no predictions the
/// scores are 1.0 (nothing to find, nothing wrongly found).
Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

/// Exact-span entity-level scores over aligned sentences.
Prf entity_level_f1(std::span<const std::vector<Span>> predicted,
                    std::span<const std::vector<Span>> gold);

/// Micro scores over relation labels, where `negative_class` is a valid
/// training label that never counts as a positive prediction or gold item.
Prf relation_micro_f1(std::span<const int> predicted, std::span<const int> gold,
                      int negative_class);

double accuracy(std::span<const int> predicted, std::span<const int> gold);

}  // namespace kebio::inline KEBIO_PRECISION_NS
