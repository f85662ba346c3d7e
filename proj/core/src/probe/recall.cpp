#include "kebio/probe/recall.hpp"

#include <set>

#include "json.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

std::vector<std::string> answer_surfaces(const ProbeQuery& query, const KnowledgeBase& kb,
                                         const Tokenizer& tokenizer) {
  std::set<std::string> out;
  for (const auto& id : query.answers) {
    for (const auto& name : kb.names(kb.require_index(id))) {
      out.insert(tokenizer.normalize_surface(name));
    }
  }
  return {out.begin(), out.end()};
}

std::vector<int> render_query(const ProbeQuery& query, std::size_t length,
                              const Tokenizer& tokenizer, std::size_t max_seq_len) {
  const auto words = tokenizer.split_words(expand_masks(query.text, length));
  const TokenizedInput input = tokenizer.encode_words(words, max_seq_len);
  std::size_t masks = 0;
  for (int id : input.ids) masks += id == Vocabulary::kMask;
  if (masks != length) {
    throw UsageError("query '" + query.text + "' does not fit in " + std::to_string(max_seq_len) +
                     " positions with " + std::to_string(length) + " masks");
  }
  return input.ids;
}

RecallReport evaluate_recall(const MaskScorer& scorer, const Tokenizer& tokenizer,
                             const std::vector<ProbeQuery>& queries, const KnowledgeBase& kb,
                             const RecallOptions& options) {
  RecallReport report;
  std::map<std::string, std::size_t> rel_index;
  for (const auto& q : queries) {
    auto [it, fresh] = rel_index.emplace(q.relation, report.relations.size());
    if (fresh) report.relations.push_back({q.relation});
    RelationRecall& rr = report.relations[it->second];

    const auto surfaces = answer_surfaces(q, kb, tokenizer);
    const std::set<std::string> targets(surfaces.begin(), surfaces.end());
    bool hit = false;
    for (std::size_t len = 1; len <= options.max_len && !hit; ++len) {
      const auto cands = decode_beam(scorer, render_query(q, len, tokenizer, options.max_seq_len),
                                     options.beam);
      for (std::size_t c = 0; c < cands.size() && c < options.top && !hit; ++c) {
        hit = targets.count(tokenizer.normalize_surface(tokenizer.detokenize(cands[c].fill))) > 0;
      }
    }
    report.correct.push_back(hit);
    ++rr.queries;
    rr.hits += hit;
    if (q.type == 1) {
      ++rr.type1;
      rr.type1_hits += hit;
    } else {
      ++rr.type2;
      rr.type2_hits += hit;
    }
  }
  report.queries = queries.size();
  double sum = 0, sum1 = 0, sum2 = 0;
  std::size_t n1 = 0, n2 = 0;
  for (const auto& rr : report.relations) {
    sum += rr.recall();
    if (rr.type1) {
      sum1 += double(rr.type1_hits) / double(rr.type1);
      ++n1;
    }
    if (rr.type2) {
      sum2 += double(rr.type2_hits) / double(rr.type2);
      ++n2;
    }
  }
  if (!report.relations.empty()) report.macro = sum / double(report.relations.size());
  if (n1) report.macro_type1 = sum1 / double(n1);
  if (n2) report.macro_type2 = sum2 / double(n2);
  return report;
}

std::string recall_report_json(const RecallReport& report) {
  nlohmann::json j;
  j["macro_recall_at_5"] = report.macro;
  j["macro_recall_type1"] = report.macro_type1;
  j["macro_recall_type2"] = report.macro_type2;
  j["queries"] = report.queries;
  auto& rels = j["relations"] = nlohmann::json::array();
  for (const auto& rr : report.relations) {
    rels.push_back({{"relation", rr.relation},
                    {"queries", rr.queries},
                    {"hits", rr.hits},
                    {"recall", rr.recall()},
                    {"type1_queries", rr.type1},
                    {"type1_hits", rr.type1_hits},
                    {"type2_queries", rr.type2},
                    {"type2_hits", rr.type2_hits}});
  }
  return j.dump(2);
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
