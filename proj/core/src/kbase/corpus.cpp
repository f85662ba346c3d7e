#include "kebio/kbase/corpus.hpp"

#include <fstream>

#include "json.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

using nlohmann::json;

void AnnotatedDocument::validate() const {
  std::size_t prev_end = 0;
  for (std::size_t m = 0; m < mentions.size(); ++m) {
    const auto& mention = mentions[m];
    if (mention.start >= mention.end || mention.end > tokens.size()) {
      throw DataError("mention " + std::to_string(m) + " span [" +
                      std::to_string(mention.start) + ", " +
                      std::to_string(mention.end) + ") invalid for " +
                      std::to_string(tokens.size()) + " tokens");
    }
    if (m > 0 && mention.start < prev_end) {
      throw DataError("mention " + std::to_string(m) +
                      " overlaps or precedes the previous mention");
    }
    if (mention.entity && mention.entity->empty()) {
      throw DataError("mention " + std::to_string(m) + " has an empty entity id");
    }
    prev_end = mention.end;
  }
}

std::vector<std::optional<std::size_t>> mention_map(const AnnotatedDocument& doc) {
  std::vector<std::optional<std::size_t>> map(doc.tokens.size());
  for (std::size_t m = 0; m < doc.mentions.size(); ++m) {
    for (std::size_t i = doc.mentions[m].start; i < doc.mentions[m].end; ++i) map[i] = m;
  }
  return map;
}

std::string to_json_line(const AnnotatedDocument& doc) {
  json mentions = json::array();
  for (const auto& m : doc.mentions) {
    json j{{"start", m.start}, {"end", m.end}};
    j["cui"] = m.entity ? json(*m.entity) : json(nullptr);
    mentions.push_back(std::move(j));
  }
  json out{{"tokens", doc.tokens}, {"mentions", std::move(mentions)}};
  return out.dump();
}

AnnotatedDocument parse_json_line(const std::string& line) {
  AnnotatedDocument doc;
  try {
    const json j = json::parse(line);
    doc.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("mentions")) {
      for (const auto& m : j.at("mentions")) {
        Mention mention;
        mention.start = m.at("start").get<std::size_t>();
        mention.end = m.at("end").get<std::size_t>();
        if (m.contains("cui") && !m.at("cui").is_null()) {
          mention.entity = m.at("cui").get<std::string>();
        }
        doc.mentions.push_back(std::move(mention));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed corpus line: ") + e.what());
  }
  doc.validate();
  return doc;
}

std::vector<AnnotatedDocument> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<AnnotatedDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      docs.push_back(parse_json_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<AnnotatedDocument>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& doc : docs) out << to_json_line(doc) << '\n';
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
