#include "kebio/annotate/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kebio/encoder/tokenizer.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {

std::string join_folded(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += case_fold(w);
  }
  return out;
}

std::set<std::string> trigrams(std::string_view folded) {
  const auto chars = utf8_chars(folded);
  std::set<std::string> out;
  for (std::size_t i = 0; i + 3 <= chars.size(); ++i) {
    out.insert(chars[i] + chars[i + 1] + chars[i + 2]);
  }
  return out;
}

// Largest double below 1: distinct strings never tie with an exact match.
const double kBelowOne = std::nextafter(1.0, 0.0);

double jaccard_capped(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  const double j = static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
  return std::min(j, kBelowOne);
}

}  // namespace

std::vector<std::string> split_text(std::string_view text) {
  return Tokenizer().split_words(text);
}

double similarity(std::string_view surface, std::string_view name) {
  const std::string a = join_folded(split_text(surface));
  const std::string b = join_folded(split_text(name));
  if (a == b) return a.empty() ? 0.0 : 1.0;
  return jaccard_capped(trigrams(a), trigrams(b));
}

Annotator::Annotator(const KnowledgeBase& kb, double threshold)
    : kb_(&kb), threshold_(threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("annotation threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
  for (std::size_t e = 0; e < kb.size(); ++e) {
    for (const auto& name : kb.names(e)) {
      const auto words = split_text(name);
      if (words.empty()) continue;
      if (words.size() >= by_length_.size()) by_length_.resize(words.size() + 1);
      by_length_[words.size()].push_back({join_folded(words), e});
      max_span_ = std::max(max_span_, words.size());
    }
  }
}

std::optional<MatchCandidate> Annotator::best_match(const std::vector<std::string>& tokens,
                                                    std::size_t start, std::size_t end) const {
  const std::size_t len = end - start;
  if (start >= end || end > tokens.size() || len >= by_length_.size()) return std::nullopt;
  const auto& entries = by_length_[len];
  if (entries.empty()) return std::nullopt;
  const std::string surface =
      join_folded(std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                           tokens.begin() + static_cast<std::ptrdiff_t>(end)));
  std::optional<std::set<std::string>> surface_grams;
  std::optional<MatchCandidate> best;
  for (const auto& entry : entries) {
    double score;
    if (entry.text == surface) {
      score = 1.0;
    } else {
      if (!surface_grams) surface_grams = trigrams(surface);
      score = jaccard_capped(*surface_grams, trigrams(entry.text));
    }
    if (score < threshold_ || score <= 0.0) continue;
    if (!best || score > best->score || (score == best->score && entry.entity < best->entity)) {
      best = MatchCandidate{start, end, entry.entity, score};
    }
  }
  return best;
}

AnnotatedDocument Annotator::annotate(const std::vector<std::string>& tokens) const {
  AnnotatedDocument doc;
  doc.tokens = tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::optional<MatchCandidate> hit;
    const std::size_t longest = std::min(max_span_, tokens.size() - i);
    for (std::size_t len = longest; len >= 1 && !hit; --len) {
      hit = best_match(tokens, i, i + len);
    }
    if (hit) {
      doc.mentions.push_back({hit->start, hit->end, kb_->entity(hit->entity)});
      i = hit->end;
    } else {
      ++i;
    }
  }
  return doc;
}

AnnotatedDocument annotate_sentence(const std::vector<std::string>& tokens,
                                    const KnowledgeBase& kb, double threshold) {
  return Annotator(kb, threshold).annotate(tokens);
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
