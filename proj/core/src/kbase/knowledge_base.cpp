#include "kebio/kbase/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool valid_id(const std::string& id) {
  return !id.empty() && std::none_of(id.begin(), id.end(), [](unsigned char c) {
    return c == '\t' || c == '\n' || c == ' ';
  });
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::vector<std::string> entities,
                             std::vector<std::vector<std::string>> names,
                             std::vector<Triplet> triplets,
                             std::size_t entity_dim)
    : entities_(std::move(entities)),
      names_(std::move(names)),
      triplets_(std::move(triplets)) {
  if (names_.size() != entities_.size()) {
    throw DataError("knowledge base: names list does not match entity count");
  }
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    if (!valid_id(entities_[i])) {
      throw DataError("knowledge base: invalid entity id '" + entities_[i] + "'");
    }
    if (!index_.emplace(entities_[i], i).second) {
      throw DataError("knowledge base: duplicate entity id " + entities_[i]);
    }
    if (names_[i].empty() || names_[i].front().empty()) {
      throw DataError("knowledge base: entity " + entities_[i] +
                            " has no preferred name");
    }
  }
  for (std::size_t t = 0; t < triplets_.size(); ++t) {
    for (const std::string* end : {&triplets_[t].subject, &triplets_[t].object}) {
      if (!index_.contains(*end)) {
        throw DataError("knowledge base: triplet " + std::to_string(t) +
                              " references unknown entity " + *end);
      }
    }
    if (triplets_[t].relation.empty()) {
      throw DataError("knowledge base: triplet " + std::to_string(t) +
                            " has an empty relation");
    }
  }
  if (entity_dim == 0) throw ConfigError("knowledge base: entity_dim must be positive");
  if (!entities_.empty()) embeddings_ = Tensor::zeros({entities_.size(), entity_dim});
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& lexicon_path,
                                  const std::filesystem::path& triplets_path,
                                  std::size_t entity_dim) {
  std::ifstream lex(lexicon_path);
  if (!lex) throw IoError("cannot open lexicon " + lexicon_path.string());
  std::vector<std::string> entities;
  std::vector<std::vector<std::string>> names;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lex, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3) {
      throw DataError(where(lexicon_path, lineno) +
                            "expected 2 or 3 tab-separated columns");
    }
    if (!valid_id(cols[0])) {
      throw DataError(where(lexicon_path, lineno) + "invalid entity id");
    }
    if (!seen.insert(cols[0]).second) {
      throw DataError(where(lexicon_path, lineno) + "duplicate entity id " + cols[0]);
    }
    if (cols[1].empty()) {
      throw DataError(where(lexicon_path, lineno) + "empty preferred name");
    }
    std::vector<std::string> forms{cols[1]};
    if (cols.size() == 3 && !cols[2].empty()) {
      for (auto& syn : split(cols[2], '|')) {
        if (syn.empty()) {
          throw DataError(where(lexicon_path, lineno) + "empty synonym");
        }
        forms.push_back(std::move(syn));
      }
    }
    entities.push_back(cols[0]);
    names.push_back(std::move(forms));
  }

  std::ifstream tri(triplets_path);
  if (!tri) throw IoError("cannot open triplets " + triplets_path.string());
  std::vector<Triplet> triplets;
  lineno = 0;
  while (std::getline(tri, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw DataError(where(triplets_path, lineno) +
                            "expected 3 tab-separated columns");
    }
    for (const std::string* end : {&cols[0], &cols[2]}) {
      if (!seen.contains(*end)) {
        throw DataError(where(triplets_path, lineno) + "unknown entity " + *end);
      }
    }
    if (cols[1].empty()) {
      throw DataError(where(triplets_path, lineno) + "empty relation name");
    }
    triplets.push_back({cols[0], cols[1], cols[2]});
  }
  return KnowledgeBase(std::move(entities), std::move(names), std::move(triplets),
                       entity_dim);
}

KnowledgeBase KnowledgeBase::load_dir(const std::filesystem::path& dir,
                                      std::size_t entity_dim) {
  return load(dir / "lexicon.tsv", dir / "triplets.tsv", entity_dim);
}

void KnowledgeBase::save(const std::filesystem::path& lexicon_path,
                         const std::filesystem::path& triplets_path) const {
  std::ofstream lex(lexicon_path, std::ios::binary);
  if (!lex) throw IoError("cannot write " + lexicon_path.string());
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    lex << entities_[i] << '\t' << names_[i][0] << '\t';
    for (std::size_t s = 1; s < names_[i].size(); ++s) {
      if (s > 1) lex << '|';
      lex << names_[i][s];
    }
    lex << '\n';
  }
  std::ofstream tri(triplets_path, std::ios::binary);
  if (!tri) throw IoError("cannot write " + triplets_path.string());
  for (const auto& t : triplets_) {
    tri << t.subject << '\t' << t.relation << '\t' << t.object << '\n';
  }
}

void KnowledgeBase::save_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save(dir / "lexicon.tsv", dir / "triplets.tsv");
}

std::optional<std::size_t> KnowledgeBase::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeBase::require_index(const std::string& id) const {
  auto idx = index_of(id);
  if (!idx) throw DataError("unknown entity id " + id);
  return *idx;
}

std::vector<std::string> KnowledgeBase::relations() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : triplets_) {
    if (seen.insert(t.relation).second) out.push_back(t.relation);
  }
  return out;
}

void KnowledgeBase::set_embeddings(Tensor table) {
  if (table.rank() != 2 || table.rows() != entities_.size()) {
    throw DimensionError("entity embedding table " + table.shape_string() +
                         " does not have one row per entity (" +
                         std::to_string(entities_.size()) + ")");
  }
  embeddings_ = std::move(table);
}

std::uint64_t KnowledgeBase::order_digest() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& e : entities_) {
    h = fnv1a64(e, h);
    h = fnv1a64(std::string_view("\n", 1), h);
  }
  return h;
}

bool same_contents(const KnowledgeBase& a, const KnowledgeBase& b) {
  if (a.entities_ != b.entities_ || a.names_ != b.names_ || a.triplets_ != b.triplets_) {
    return false;
  }
  if (a.embeddings_.defined() != b.embeddings_.defined()) return false;
  if (!a.embeddings_.defined()) return true;
  if (a.embeddings_.shape() != b.embeddings_.shape()) return false;
  const auto x = a.embeddings_.data();
  const auto y = b.embeddings_.data();
  return std::equal(x.begin(), x.end(), y.begin());
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
