#pragma once

#include <map>
#include <string>
#include <vector>

#include "kebio/encoder/tokenizer.hpp"
#include "kebio/probe/decode.hpp"
#include "kebio/probe/queries.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct RecallOptions {
  std::size_t beam = kDefaultBeam;
  std::size_t max_len = kMaxMaskLength;
  std::size_t top = 5;  // candidates per (query, L) that count
  std::size_t max_seq_len = 128;
};

struct RelationRecall {
  std::string relation;
  std::size_t queries = 0, hits = 0;
  std::size_t type1 = 0, type1_hits = 0;
  std::size_t type2 = 0, type2_hits = 0;
  double recall() const { return queries ? double(hits) / double(queries) : 0.0; }
};

struct RecallReport {
  std::vector<RelationRecall> relations;  // first-seen order
  double macro = 0;
  double macro_type1 = 0;  // over relations with type-1 queries
  double macro_type2 = 0;
  std::size_t queries = 0;
  std::vector<std::uint8_t> correct;  // per input query
};

/// Canonical surfaces an answer may take: normalized synonyms of every answer.
std::vector<std::string> answer_surfaces(const ProbeQuery& query, const KnowledgeBase& kb,
                                         const Tokenizer& tokenizer);

/// Token ids of `query` with its placeholder expanded to `length` masks.
std::vector<int> render_query(const ProbeQuery& query, std::size_t length,
                              const Tokenizer& tokenizer, std::size_t max_seq_len);

/// A query is correct when any of the top candidates at any L in
/// [1, max_len] detokenizes to an answer surface.
RecallReport evaluate_recall(const MaskScorer& scorer, const Tokenizer& tokenizer,
                             const std::vector<ProbeQuery>& queries, const KnowledgeBase& kb,
                             const RecallOptions& options = {});

/// Report as JSON text (per-relation table plus macro summary).
std::string recall_report_json(const RecallReport& report);

}  // namespace kebio::inline KEBIO_PRECISION_NS
