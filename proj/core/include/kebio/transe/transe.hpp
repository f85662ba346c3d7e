#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kebio/kbase/knowledge_base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct TranseConfig {
  std::size_t dim = kDefaultEntityDim;
  int epochs = 30;
  double lr = 1e-3;
  std::size_t batch_size = 2048;
  double margin = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TripletIds {
  std::size_t subject = 0;
  std::size_t relation = 0;
  std::size_t object = 0;
  friend bool operator==(const TripletIds&, const TripletIds&) = default;
};

/// Uniform in [-6/sqrt(dim), 6/sqrt(dim)].
Tensor random_entity_table(std::size_t rows, std::size_t dim, Rng& rng);

class TranseModel {
 public:
  TranseModel() = default;
  TranseModel(std::size_t entities, std::size_t relations, std::size_t dim, double margin,
              Rng& rng);

  /// ||e_s + r - e_o||_2
  double score(std::size_t s, std::size_t r, std::size_t o) const;
  double score(const TripletIds& t) const { return score(t.subject, t.relation, t.object); }
  /// max(0, margin + score(pos) - score(neg))
  double margin_loss(const TripletIds& positive, const TripletIds& negative) const;

  /// Scales every entity row to unit L2 norm.
  void normalize_entities();

  std::size_t dim() const { return entities.cols(); }

  Tensor entities;   // [|E| x d]
  Tensor relations;  // [|R| x d]
  double margin = 1.0;
};

/// KB triplets as row indices; relation ids follow kb.relations() order.
std::vector<TripletIds> index_triplets(const KnowledgeBase& kb);

/// Margin-ranking training with one corrupted head or tail per positive.
/// Writes the entity table into kb (row order = kb entity order).
TranseModel train_transe(KnowledgeBase& kb, const TranseConfig& config,
                         const std::function<void(int epoch, double mean_loss)>& on_epoch = {});

/// Tail prediction over every entity. A tie with another candidate counts as
/// a miss.
double tail_hits_at_1(const TranseModel& model, std::span<const TripletIds> triplets);

}  // namespace kebio::inline KEBIO_PRECISION_NS
