#include "kebio/encoder/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {

constexpr std::string_view kReserved[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

std::string strip_hashes(const std::string& piece) {
  return piece.rfind("##", 0) == 0 ? piece.substr(2) : piece;
}

}  // namespace

bool looks_special(std::string_view token) {
  if (token.size() >= 3 && token.front() == '[' && token.back() == ']') {
    return std::all_of(token.begin() + 1, token.end() - 1, [](char c) {
      return (c >= 'A' && c <= 'Z') || c == '_' || (c >= '0' && c <= '9');
    });
  }
  if (token.size() >= 3 && token.front() == '@' && token.back() == '$') {
    return std::all_of(token.begin() + 1, token.end() - 1, [](char c) {
      return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' ||
             c == '-' || (c >= '0' && c <= '9');
    });
  }
  return false;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string case_fold(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto r : kReserved) append(std::string(r));
}

void Vocabulary::append(std::string piece) {
  const int id = static_cast<int>(pieces_.size());
  ids_.emplace(piece, id);
  pieces_.push_back(std::move(piece));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus_words,
                             std::size_t target_size) {
  if (target_size < static_cast<std::size_t>(kNumReserved)) {
    throw ConfigError("vocabulary size " + std::to_string(target_size) +
                      " is smaller than the " + std::to_string(kNumReserved) +
                      " reserved tokens");
  }
  if (corpus_words.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");

  Vocabulary vocab;
  std::map<std::string, long> freq;
  for (const auto& w : corpus_words) {
    if (w.empty()) continue;
    if (looks_special(w)) {
      vocab.add_special(w);
      continue;
    }
    ++freq[case_fold(w)];
  }

  // Alphabet: every character in both positions, so any word spelled with
  // corpus characters stays tokenizable.
  std::set<std::string> alphabet;
  std::vector<std::pair<std::vector<std::string>, long>> words;
  for (const auto& [w, count] : freq) {
    auto chars = utf8_chars(w);
    std::vector<std::string> symbols;
    for (std::size_t i = 0; i < chars.size(); ++i) {
      alphabet.insert(chars[i]);
      symbols.push_back(i == 0 ? chars[i] : "##" + chars[i]);
    }
    words.emplace_back(std::move(symbols), count);
  }
  for (const auto& c : alphabet) {
    if (!vocab.find(c)) vocab.append(c);
  }
  for (const auto& c : alphabet) {
    if (!vocab.find("##" + c)) vocab.append("##" + c);
  }

  while (vocab.size() < target_size) {
    std::map<std::pair<std::string, std::string>, long> pairs;
    for (const auto& [symbols, count] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pairs[{symbols[i], symbols[i + 1]}] += count;
      }
    }
    if (pairs.empty()) break;
    // Highest count; std::map order breaks ties lexicographically.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    const std::string merged = left + strip_hashes(right);
    if (!vocab.find(merged)) vocab.append(merged);
    for (auto& [symbols, count] : words) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(symbols[i]);
        }
      }
      symbols = std::move(next);
    }
  }
  return vocab;
}

Vocabulary Vocabulary::from_lines(const std::vector<std::string>& pieces) {
  if (pieces.size() < static_cast<std::size_t>(kNumReserved)) {
    throw DataError("vocabulary has fewer lines than the reserved tokens");
  }
  for (int i = 0; i < kNumReserved; ++i) {
    if (pieces[static_cast<std::size_t>(i)] != kReserved[i]) {
      throw DataError("vocabulary line " + std::to_string(i + 1) + " must be " +
                      std::string(kReserved[i]));
    }
  }
  Vocabulary vocab;
  for (std::size_t i = kNumReserved; i < pieces.size(); ++i) {
    if (pieces[i].empty()) throw DataError("vocabulary line " + std::to_string(i + 1) + " is empty");
    if (vocab.find(pieces[i])) {
      throw DataError("vocabulary piece '" + pieces[i] + "' appears twice");
    }
    vocab.append(pieces[i]);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return from_lines(lines);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& p : pieces_) out << p << '\n';
}

std::optional<int> Vocabulary::find(std::string_view piece) const {
  auto it = ids_.find(std::string(piece));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return pieces_[static_cast<std::size_t>(id)];
}

int Vocabulary::add_special(const std::string& token) {
  if (!looks_special(token)) {
    throw UsageError("'" + token + "' is not a valid special token ([NAME] or @NAME$)");
  }
  if (auto id = find(token)) return *id;
  append(token);
  return static_cast<int>(pieces_.size() - 1);
}

bool Vocabulary::is_special(int id) const {
  return is_reserved(id) || looks_special(piece(id));
}

std::uint64_t Vocabulary::digest() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& p : pieces_) {
    h = fnv1a64(p, h);
    h = fnv1a64(std::string_view("\n", 1), h);
  }
  return h;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
