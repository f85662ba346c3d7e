#include "kebio/encoder/tokenizer.hpp"

#include <cctype>

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {

constexpr std::size_t kMaxWordChars = 100;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_punct(char c) {
  return static_cast<unsigned char>(c) < 128 && std::ispunct(static_cast<unsigned char>(c));
}

// Length of the special token starting at text[pos], or 0.
std::size_t special_at(std::string_view text, std::size_t pos) {
  const char open = text[pos];
  const char close = open == '[' ? ']' : (open == '@' ? '$' : '\0');
  if (close == '\0') return 0;
  const std::size_t end = text.find(close, pos + 1);
  if (end == std::string_view::npos) return 0;
  const std::size_t len = end - pos + 1;
  return looks_special(text.substr(pos, len)) ? len : 0;
}

}  // namespace

void pad_input(TokenizedInput& input, std::size_t length) {
  while (input.ids.size() < length) {
    input.ids.push_back(Vocabulary::kPad);
    input.attention_mask.push_back(0);
    input.word_start.push_back(0);
  }
}

std::vector<std::string> Tokenizer::split_words(std::string_view text) const {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      flush();
      ++i;
      continue;
    }
    if (const std::size_t len = special_at(text, i)) {
      flush();
      out.emplace_back(text.substr(i, len));
      i += len;
      continue;
    }
    if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
      ++i;
      continue;
    }
    current.push_back(c);
    ++i;
  }
  flush();
  return out;
}

std::vector<int> Tokenizer::word_pieces(std::string_view word) const {
  if (looks_special(word)) {
    if (auto id = vocab_.find(word)) return {*id};
  }
  const auto chars = utf8_chars(case_fold(word));
  if (chars.empty()) return {};
  if (chars.size() > kMaxWordChars) return {Vocabulary::kUnk};
  std::vector<int> pieces;
  std::size_t start = 0;
  while (start < chars.size()) {
    int found = -1;
    std::size_t found_end = start;
    std::string candidate = start > 0 ? "##" : "";
    for (std::size_t end = start; end < chars.size(); ++end) {
      candidate += chars[end];
      if (auto id = vocab_.find(candidate)) {
        found = *id;
        found_end = end + 1;
      }
    }
    if (found < 0) return {Vocabulary::kUnk};
    pieces.push_back(found);
    start = found_end;
  }
  return pieces;
}

TokenizedInput Tokenizer::encode_words(const std::vector<std::string>& words,
                                       std::size_t max_len) const {
  if (max_len < 2) throw UsageError("max_len must leave room for [CLS] and [SEP]");
  TokenizedInput input;
  input.ids.push_back(Vocabulary::kCls);
  input.word_start.push_back(0);
  for (const auto& w : words) {
    auto pieces = word_pieces(w);
    if (pieces.empty()) {
      // Keep word indices aligned with the caller's tokens.
      input.words.emplace_back(input.ids.size(), input.ids.size());
      continue;
    }
    if (input.ids.size() + pieces.size() + 1 > max_len) break;
    const std::size_t begin = input.ids.size();
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      input.ids.push_back(pieces[p]);
      input.word_start.push_back(p == 0 ? 1 : 0);
    }
    input.words.emplace_back(begin, input.ids.size());
  }
  input.ids.push_back(Vocabulary::kSep);
  input.word_start.push_back(0);
  input.attention_mask.assign(input.ids.size(), 1);
  return input;
}

TokenizedInput Tokenizer::encode_document(const AnnotatedDocument& doc,
                                          const KnowledgeBase* kb,
                                          std::size_t max_len) const {
  doc.validate();
  TokenizedInput input = encode_words(doc.tokens, max_len);
  for (const auto& m : doc.mentions) {
    if (m.end > input.words.size()) break;
    const std::size_t begin = input.words[m.start].first;
    const std::size_t end = input.words[m.end - 1].second;
    if (end <= begin) continue;  // mention made only of empty words
    int entity = kNilEntity;
    if (m.entity) {
      if (kb == nullptr) throw UsageError("encode_document: linked mention but no knowledge base");
      entity = static_cast<int>(kb->require_index(*m.entity));
    }
    input.mentions.push_back({begin, end, entity});
  }
  return input;
}

std::string Tokenizer::detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == Vocabulary::kCls || id == Vocabulary::kSep || id == Vocabulary::kPad) continue;
    const std::string& piece = vocab_.piece(id);
    if (piece.rfind("##", 0) == 0 && !out.empty()) {
      out += piece.substr(2);
    } else {
      if (!out.empty()) out += ' ';
      out += piece;
    }
  }
  return out;
}

std::string Tokenizer::normalize_surface(std::string_view text) const {
  std::string out;
  for (const auto& w : split_words(text)) {
    if (!out.empty()) out += ' ';
    out += case_fold(w);
  }
  return out;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
