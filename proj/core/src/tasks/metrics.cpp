#include "kebio/tasks/metrics.hpp"

#include <set>
#include <string>

#include "kebio/base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  if (tp + fp + fn == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
  r.f1 = r.precision + r.recall == 0 ? 0.0
                                     : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Prf entity_level_f1(std::span<const std::vector<Span>> predicted,
                    std::span<const std::vector<Span>> gold) {
  if (predicted.size() != gold.size()) {
    throw DataError("entity_level_f1: " + std::to_string(predicted.size()) +
                    " predicted sentences vs " + std::to_string(gold.size()) + " gold");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::set<Span> p(predicted[i].begin(), predicted[i].end());
    const std::set<Span> g(gold[i].begin(), gold[i].end());
    for (const auto& s : p) (g.count(s) ? tp : fp) += 1;
    for (const auto& s : g) fn += p.count(s) ? 0 : 1;
  }
  return prf_from_counts(tp, fp, fn);
}

Prf relation_micro_f1(std::span<const int> predicted, std::span<const int> gold,
                      int negative_class) {
  if (predicted.size() != gold.size()) {
    throw DataError("relation_micro_f1: " + std::to_string(predicted.size()) +
                    " predictions vs " + std::to_string(gold.size()) + " gold labels");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool pos_pred = predicted[i] != negative_class;
    const bool pos_gold = gold[i] != negative_class;
    if (pos_pred && predicted[i] == gold[i]) {
      ++tp;
      continue;
    }
    if (pos_pred) ++fp;
    if (pos_gold) ++fn;
  }
  return prf_from_counts(tp, fp, fn);
}

double accuracy(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw DataError("accuracy: length mismatch");
  if (gold.empty()) return 1.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) ok += predicted[i] == gold[i];
  return double(ok) / double(gold.size());
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
