#include "kebio/probe/queries.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "kebio/encoder/vocab.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

std::string normalize_relation(std::string_view name) {
  std::string phrase(name);
  std::replace(phrase.begin(), phrase.end(), '_', ' ');
  const auto last_space = phrase.find_last_of(' ');
  const std::string last = last_space == std::string::npos ? phrase : phrase.substr(last_space + 1);
  if (last == "of" || last == "as" || last == "by") phrase = "is " + phrase;
  return phrase;
}

std::string expand_masks(std::string_view text, std::size_t length) {
  const auto pos = text.find(kMaskToken);
  if (pos == std::string_view::npos) throw DataError("query has no [MASK] placeholder");
  std::string masks;
  for (std::size_t i = 0; i < length; ++i) {
    if (i) masks += ' ';
    masks += kMaskToken;
  }
  return std::string(text.substr(0, pos)) + masks + std::string(text.substr(pos + kMaskToken.size()));
}

int query_type(std::string_view text, const std::vector<std::string>& answers,
               const KnowledgeBase& kb) {
  std::string folded = case_fold(text);
  const auto pos = folded.find(case_fold(kMaskToken));
  if (pos != std::string::npos) folded.replace(pos, kMaskToken.size(), " ");
  for (const auto& id : answers) {
    for (const auto& name : kb.names(kb.require_index(id))) {
      if (folded.find(case_fold(name)) != std::string::npos) return 1;
    }
  }
  return 2;
}

std::vector<ProbeQuery> generate_queries(const KnowledgeBase& kb, std::uint64_t seed,
                                         std::size_t max_per_relation) {
  if (kb.triplets().empty()) throw UsageError("probe-gen: the knowledge base has no triplets");
  // (relation, form, text) -> answers
  std::map<std::string, std::map<std::pair<int, std::string>, std::set<std::string>>> grouped;
  for (const auto& t : kb.triplets()) {
    const std::size_t s = kb.require_index(t.subject), o = kb.require_index(t.object);
    if (kb.names(s).empty() || kb.names(o).empty()) {
      throw DataError("entity without names in triplet " + t.subject + " " + t.relation + " " + t.object);
    }
    const std::string rel = normalize_relation(t.relation);
    const std::string q1 = kb.preferred_name(s) + " " + rel + " " + std::string(kMaskToken) + ".";
    const std::string q2 = std::string(kMaskToken) + " " + rel + " " + kb.preferred_name(o) + ".";
    grouped[t.relation][{1, q1}].insert(t.object);
    grouped[t.relation][{2, q2}].insert(t.subject);
  }

  std::vector<ProbeQuery> out;
  const auto relations = kb.relations();
  for (std::size_t r = 0; r < relations.size(); ++r) {
    const auto& rel = relations[r];
    std::vector<ProbeQuery> qs;
    for (const auto& [key, answers] : grouped[rel]) {
      ProbeQuery q;
      q.form = key.first == 1 ? QueryForm::kQ1 : QueryForm::kQ2;
      q.text = key.second;
      q.relation = normalize_relation(rel);
      q.answers.assign(answers.begin(), answers.end());
      q.type = query_type(q.text, q.answers, kb);
      qs.push_back(std::move(q));
    }
    // Texts are unique across forms: merge the rare Q1/Q2 coincidence.
    std::sort(qs.begin(), qs.end(), [](const auto& a, const auto& b) { return a.text < b.text; });
    std::vector<ProbeQuery> unique;
    for (auto& q : qs) {
      if (!unique.empty() && unique.back().text == q.text) {
        std::set<std::string> merged(unique.back().answers.begin(), unique.back().answers.end());
        merged.insert(q.answers.begin(), q.answers.end());
        unique.back().answers.assign(merged.begin(), merged.end());
        unique.back().type = query_type(unique.back().text, unique.back().answers, kb);
      } else {
        unique.push_back(std::move(q));
      }
    }
    if (unique.size() > max_per_relation) {
      Rng rng(Rng::derive(seed, {0x9e11, r}));
      for (std::size_t i = unique.size(); i > 1; --i) std::swap(unique[i - 1], unique[rng.below(i)]);
      unique.resize(max_per_relation);
      std::sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) { return a.text < b.text; });
    }
    for (auto& q : unique) out.push_back(std::move(q));
  }
  return out;
}

void write_queries(const std::filesystem::path& path, const std::vector<ProbeQuery>& queries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write queries " + path.string());
  for (const auto& q : queries) {
    nlohmann::json j;
    j["text"] = q.text;
    j["relation"] = q.relation;
    j["answers"] = q.answers;
    j["type"] = q.type;
    j["form"] = q.form == QueryForm::kQ1 ? "Q1" : "Q2";
    out << j.dump() << '\n';
  }
}

std::vector<ProbeQuery> read_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open queries " + path.string());
  std::vector<ProbeQuery> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ProbeQuery q;
      q.text = j.at("text").get<std::string>();
      q.relation = j.at("relation").get<std::string>();
      q.answers = j.at("answers").get<std::vector<std::string>>();
      q.type = j.at("type").get<int>();
      q.form = j.value("form", std::string("Q1")) == "Q2" ? QueryForm::kQ2 : QueryForm::kQ1;
      if (q.answers.empty()) throw DataError("query has no answers");
      if (q.text.find(kMaskToken) == std::string::npos) throw DataError("query has no [MASK]");
      out.push_back(std::move(q));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
