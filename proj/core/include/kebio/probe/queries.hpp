#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kebio/kbase/knowledge_base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr std::size_t kMaxQueriesPerRelation = 200;
inline constexpr std::string_view kMaskToken = "[MASK]";

enum class QueryForm { kQ1 = 1, kQ2 = 2 };  // Q1 masks the object, Q2 the subject

/// Cloze query with a single [MASK] placeholder; decoding expands it to L
/// masks. Text ends with "." before [SEP].
struct ProbeQuery {
  std::string text;
  QueryForm form = QueryForm::kQ1;
  std::string relation;  // normalized phrase
  std::vector<std::string> answers;  // entity ids, sorted
  int type = 2;  // 1: an answer surface occurs inside the query

  friend bool operator==(const ProbeQuery&, const ProbeQuery&) = default;
};

/// Underscores become spaces; relations ending in "of", "as" or "by" gain a
/// leading "is ".
std::string normalize_relation(std::string_view name);

/// Query text with the placeholder replaced by `length` masks.
std::string expand_masks(std::string_view text, std::size_t length);

/// Q1 and Q2 for every triplet, merged on identical text (answer union),
/// then at most `max_per_relation` per relation by a seeded shuffle.
/// Output order: relation first-seen order, then text.
std::vector<ProbeQuery> generate_queries(const KnowledgeBase& kb, std::uint64_t seed,
                                         std::size_t max_per_relation = kMaxQueriesPerRelation);

/// 1 if a case-folded surface name of any answer is a substring of the
/// case-folded query text (placeholder excluded), else 2.
int query_type(std::string_view text, const std::vector<std::string>& answers,
               const KnowledgeBase& kb);

/// JSONL: {"text", "relation", "answers", "type", "form"}.
void write_queries(const std::filesystem::path& path, const std::vector<ProbeQuery>& queries);
std::vector<ProbeQuery> read_queries(const std::filesystem::path& path);

}  // namespace kebio::inline KEBIO_PRECISION_NS
