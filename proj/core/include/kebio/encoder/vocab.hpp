#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kebio/base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// Wordpiece inventory. Ids 0..4 are reserved ([PAD] [UNK] [CLS] [SEP] [MASK])
/// and keep their ids across save/load. Continuation pieces carry a "##"
/// prefix. Extra special tokens (e.g. relation indicators such as @GENE$) can
/// be appended; they are matched atomically and never split.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumReserved = 5;

  Vocabulary();

  /// Greedy frequency-based inventory: every character of the corpus (as a
  /// word-initial and a continuation piece), then repeatedly the most frequent
  /// adjacent piece pair, until `target_size` pieces or nothing left to merge.
  /// Input words are case-folded.
  static Vocabulary build(const std::vector<std::string>& corpus_words,
                          std::size_t target_size);

  /// One piece per line; line number is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  static Vocabulary from_lines(const std::vector<std::string>& pieces);

  std::size_t size() const { return pieces_.size(); }
  std::optional<int> find(std::string_view piece) const;
  const std::string& piece(int id) const;
  const std::vector<std::string>& pieces() const { return pieces_; }

  /// Registers an atomic token; returns its id (existing id if present).
  int add_special(const std::string& token);
  bool is_special(int id) const;
  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

  std::uint64_t digest() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.pieces_ == b.pieces_;
  }

 private:
  void append(std::string piece);

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
};

/// Bracketed upper-case tokens ([MASK]) and indicator tokens (@GENE$).
bool looks_special(std::string_view token);

/// Splits UTF-8 text into code points.
std::vector<std::string> utf8_chars(std::string_view text);

/// ASCII case folding; other bytes pass through.
std::string case_fold(std::string_view text);

}  // namespace kebio::inline KEBIO_PRECISION_NS
