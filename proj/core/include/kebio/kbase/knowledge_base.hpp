#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kebio/ndmath/tensor.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr std::size_t kDefaultEntityDim = 100;

struct Triplet {
  std::string subject;
  std::string relation;
  std::string object;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Entity set, synonym lexicon, relation triplets and the entity-embedding
/// table. Entity order is the embedding row order and never changes after
/// construction.
///
/// On disk a KB is two UTF-8 TSV files:
///   lexicon:  entity_id <TAB> preferred_name <TAB> syn1|syn2|...
///   triplets: subject_id <TAB> relation_name <TAB> object_id
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  /// Validates and builds. names[i] lists the surface forms of entities[i],
  /// preferred first.
  KnowledgeBase(std::vector<std::string> entities,
                std::vector<std::vector<std::string>> names,
                std::vector<Triplet> triplets,
                std::size_t entity_dim = kDefaultEntityDim);

  static KnowledgeBase load(const std::filesystem::path& lexicon_path,
                            const std::filesystem::path& triplets_path,
                            std::size_t entity_dim = kDefaultEntityDim);
  /// Loads `<dir>/lexicon.tsv` and `<dir>/triplets.tsv`.
  static KnowledgeBase load_dir(const std::filesystem::path& dir,
                                std::size_t entity_dim = kDefaultEntityDim);

  void save(const std::filesystem::path& lexicon_path,
            const std::filesystem::path& triplets_path) const;
  void save_dir(const std::filesystem::path& dir) const;

  std::size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }
  const std::vector<std::string>& entities() const { return entities_; }
  const std::string& entity(std::size_t index) const { return entities_.at(index); }
  std::optional<std::size_t> index_of(const std::string& id) const;
  /// Throws DataError for unknown ids.
  std::size_t require_index(const std::string& id) const;

  const std::vector<std::string>& names(std::size_t index) const { return names_.at(index); }
  const std::string& preferred_name(std::size_t index) const { return names_.at(index).front(); }

  const std::vector<Triplet>& triplets() const { return triplets_; }
  /// Distinct relation names in first-seen order.
  std::vector<std::string> relations() const;

  std::size_t entity_dim() const { return embeddings_.cols(); }
  const Tensor& embeddings() const { return embeddings_; }
  Tensor& embeddings() { return embeddings_; }
  /// Replaces the table; rows must match the entity count.
  void set_embeddings(Tensor table);

  /// Digest of the entity order; checkpoints record it to catch misaligned
  /// embedding rows.
  std::uint64_t order_digest() const;

  friend bool same_contents(const KnowledgeBase& a, const KnowledgeBase& b);

 private:
  std::vector<std::string> entities_;
  std::vector<std::vector<std::string>> names_;
  std::vector<Triplet> triplets_;
  std::unordered_map<std::string, std::size_t> index_;
  Tensor embeddings_;
};

/// Field equality (entities, names, triplets, embedding values).
bool same_contents(const KnowledgeBase& a, const KnowledgeBase& b);

}  // namespace kebio::inline KEBIO_PRECISION_NS
