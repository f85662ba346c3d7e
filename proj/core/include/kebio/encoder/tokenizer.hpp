#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kebio/encoder/vocab.hpp"
#include "kebio/kbase/corpus.hpp"
#include "kebio/kbase/knowledge_base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr int kNilEntity = -1;

/// Mention over wordpieces: [begin, end). Its boundary states are the first
/// piece of the start word (begin) and the last piece of the end word (end-1).
struct PieceMention {
  std::size_t begin = 0;
  std::size_t end = 0;
  int entity = kNilEntity;  // KB row, or kNilEntity

  std::size_t first() const { return begin; }
  std::size_t last() const { return end - 1; }
  friend bool operator==(const PieceMention&, const PieceMention&) = default;
};

struct TokenizedInput {
  std::vector<int> ids;                    // starts with [CLS], ends with [SEP] (then padding)
  std::vector<std::uint8_t> attention_mask;  // 1 = real position
  std::vector<std::uint8_t> word_start;      // 1 on the first piece of each word
  std::vector<std::pair<std::size_t, std::size_t>> words;  // piece range per kept word
  std::vector<PieceMention> mentions;

  std::size_t length() const { return ids.size(); }
};

/// Appends [PAD] positions up to `length`.
void pad_input(TokenizedInput& input, std::size_t length);

class Tokenizer {
 public:
  Tokenizer() = default;
  explicit Tokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

  /// Whitespace split, with punctuation split off into its own words and
  /// special tokens ([MASK], @GENE$, ...) kept whole. Case is preserved.
  std::vector<std::string> split_words(std::string_view text) const;

  /// Greedy longest-match-first wordpieces of one (case-folded) word; a word
  /// that cannot be covered becomes a single [UNK].
  std::vector<int> word_pieces(std::string_view word) const;

  /// [CLS] pieces(words) [SEP]. Trailing words that do not fit in max_len are
  /// dropped (the caller asked for truncation by passing max_len).
  TokenizedInput encode_words(const std::vector<std::string>& words,
                              std::size_t max_len) const;

  /// As encode_words over the document tokens, with mentions carried over to
  /// pieces. Mentions cut by truncation are dropped. Entity ids resolve
  /// against `kb` (DataError if unknown); NIL stays kNilEntity.
  TokenizedInput encode_document(const AnnotatedDocument& doc,
                                 const KnowledgeBase* kb,
                                 std::size_t max_len) const;

  /// Inverse of wordpiece segmentation: "##" pieces glue onto the previous
  /// piece, words are space-separated. [CLS]/[SEP]/[PAD] are skipped.
  std::string detokenize(std::span<const int> ids) const;

  /// Case-folded words of `text` joined by single spaces; the canonical form
  /// used for answer matching.
  std::string normalize_surface(std::string_view text) const;

 private:
  Vocabulary vocab_;
};

}  // namespace kebio::inline KEBIO_PRECISION_NS
