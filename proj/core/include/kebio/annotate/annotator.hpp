#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kebio/kbase/corpus.hpp"
#include "kebio/kbase/knowledge_base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr double kDefaultLinkThreshold = 0.85;

struct MatchCandidate {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t entity = 0;  // KB row
  double score = 0;
};

/// 1.0 when the case-folded token sequences agree; otherwise the Jaccard
/// overlap of character trigram sets, kept strictly below 1. Symmetric.
double similarity(std::string_view surface, std::string_view name);

/// Dictionary matcher over a KB lexicon. Indexes every synonym by its
/// case-folded token sequence; a span is scored against names whose token
/// count matches the span length.
class Annotator {
 public:
  explicit Annotator(const KnowledgeBase& kb, double threshold = kDefaultLinkThreshold);

  /// Best-scoring entity for tokens[start, end), if any clears the threshold.
  std::optional<MatchCandidate> best_match(const std::vector<std::string>& tokens,
                                           std::size_t start, std::size_t end) const;

  /// Greedy longest-match, left to right. At each position the longest span
  /// with a match wins; among equal lengths the higher score, then the lower
  /// entity index.
  AnnotatedDocument annotate(const std::vector<std::string>& tokens) const;

  double threshold() const { return threshold_; }
  std::size_t max_span() const { return max_span_; }

 private:
  struct Entry {
    std::string text;  // case-folded, single-space joined
    std::size_t entity;
  };
  const KnowledgeBase* kb_;
  double threshold_;
  std::size_t max_span_ = 0;
  std::vector<std::vector<Entry>> by_length_;  // index = token count
};

AnnotatedDocument annotate_sentence(const std::vector<std::string>& tokens,
                                    const KnowledgeBase& kb,
                                    double threshold = kDefaultLinkThreshold);

/// Whitespace/punctuation split used for raw-text lines.
std::vector<std::string> split_text(std::string_view text);

}  // namespace kebio::inline KEBIO_PRECISION_NS
