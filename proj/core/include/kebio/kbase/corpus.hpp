#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kebio/base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// Token span [start, end) grounded to an entity id, or NIL when unlinked.
struct Mention {
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<std::string> entity;

  friend bool operator==(const Mention&, const Mention&) = default;
};

/// Whitespace tokens plus linked mention spans. Spans are sorted by start and
/// pairwise disjoint.
struct AnnotatedDocument {
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;

  /// Throws DataError describing the first broken invariant.
  void validate() const;

  friend bool operator==(const AnnotatedDocument&, const AnnotatedDocument&) = default;
};

/// For each token, the index of the mention covering it (nullopt = NIL).
std::vector<std::optional<std::size_t>> mention_map(const AnnotatedDocument& doc);

/// One JSON object per line:
///   {"tokens": [...], "mentions": [{"start": s, "end": e, "cui": "C..." | null}]}
std::string to_json_line(const AnnotatedDocument& doc);
AnnotatedDocument parse_json_line(const std::string& line);

std::vector<AnnotatedDocument> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path,
                  const std::vector<AnnotatedDocument>& docs);

}  // namespace kebio::inline KEBIO_PRECISION_NS
