#pragma once
// Shared fixtures for unit and acceptance tests. Header-only so the same code
// compiles against either precision of the core library.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kebio/annotate/annotator.hpp"
#include "kebio/kbase/corpus.hpp"
#include "kebio/kbase/knowledge_base.hpp"
#include "kebio/model.hpp"
#include "kebio/ndmath/tape.hpp"
#include "kebio/probe/decode.hpp"

namespace kebio_test {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("kebio_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Pronounceable, distinct single-word names: stems are chosen so no name is a
// prefix of another and every stem is at least four letters.
inline std::string entity_word(std::size_t i) {
  static const char* kStems[] = {"zorvex", "malide", "tivorin", "quanex", "belotan", "corimab",
                                 "duxafen", "ferolin", "gavitro", "hepsilon", "jurazol", "kelvamid",
                                 "lumorex", "nexiprin", "obrafen", "pyrodex", "ruxalin", "sovatem",
                                 "trazimol", "uvenaxt", "valdomir", "wexolan", "xyfarin", "yblotex",
                                 "zentrimab", "ambrisol", "bexarin", "cytolvan", "dermofex", "eluvian",
                                 "fosplen", "glivacor", "humarix", "imbravol", "jestrin", "kovanel",
                                 "lorvatex", "mebrisol", "noxafil", "opravin"};
  constexpr std::size_t n = sizeof(kStems) / sizeof(kStems[0]);
  return i < n ? kStems[i] : std::string(kStems[i % n]) + std::to_string(i / n);
}

/// Entities C0000000.. with one-word preferred names and a second synonym.
inline kebio::KnowledgeBase synthetic_kb(std::size_t entities, std::size_t dim,
                                         std::vector<kebio::Triplet> triplets = {}) {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> names;
  for (std::size_t i = 0; i < entities; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "C%07zu", i);
    ids.emplace_back(buf);
    names.push_back({entity_word(i), entity_word(i) + " agent"});
  }
  return kebio::KnowledgeBase(std::move(ids), std::move(names), std::move(triplets), dim);
}

/// Templated sentences with one or two linked mentions each.
inline std::vector<kebio::AnnotatedDocument> synthetic_corpus(const kebio::KnowledgeBase& kb,
                                                              std::size_t sentences,
                                                              std::uint64_t seed) {
  static const std::vector<std::vector<std::string>> kTemplates = {
      {"@", "may", "treat", "#", "in", "adults", "."},
      {"patients", "given", "@", "showed", "less", "#", "."},
      {"@", "is", "used", "for", "#", "."},
      {"the", "effect", "of", "@", "on", "#", "was", "studied", "."},
  };
  kebio::Rng rng(seed);
  std::vector<kebio::AnnotatedDocument> docs;
  for (std::size_t s = 0; s < sentences; ++s) {
    const auto& tpl = kTemplates[s % kTemplates.size()];
    const std::size_t a = rng.below(kb.size());
    std::size_t b = rng.below(kb.size());
    if (b == a) b = (b + 1) % kb.size();
    kebio::AnnotatedDocument d;
    for (const auto& w : tpl) {
      if (w == "@" || w == "#") {
        const std::size_t e = w == "@" ? a : b;
        d.mentions.push_back({d.tokens.size(), d.tokens.size() + 1, kb.entity(e)});
        d.tokens.push_back(kb.preferred_name(e));
      } else {
        d.tokens.push_back(w);
      }
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

/// KB, annotated corpus, vocabulary and model wired together.
struct ToyWorld {
  kebio::KnowledgeBase kb;
  std::vector<kebio::AnnotatedDocument> docs;
  kebio::Tokenizer tokenizer;
  kebio::KebioModel model;
  std::vector<kebio::TokenizedInput> inputs;
};

/// `config.vocab_size` is overwritten with the size of the built vocabulary.
inline ToyWorld toy_world(kebio::EncoderConfig config, std::size_t entities, std::size_t sentences,
                          std::uint64_t seed, std::size_t vocab_target = 200) {
  ToyWorld w;
  w.kb = synthetic_kb(entities, config.entity_dim);
  kebio::Rng erng(seed ^ 0xabcdef);
  w.kb.set_embeddings(kebio::init_normal({entities, config.entity_dim}, 1.0, erng).detach());
  w.docs = synthetic_corpus(w.kb, sentences, seed);
  std::vector<std::string> words;
  for (const auto& d : w.docs) words.insert(words.end(), d.tokens.begin(), d.tokens.end());
  for (std::size_t e = 0; e < w.kb.size(); ++e) {
    for (const auto& n : w.kb.names(e)) {
      for (auto& t : kebio::split_text(n)) words.push_back(t);
    }
  }
  w.tokenizer = kebio::Tokenizer(kebio::Vocabulary::build(words, vocab_target));
  config.vocab_size = w.tokenizer.vocab().size();
  kebio::Rng rng(seed);
  w.model = kebio::KebioModel(config, rng);
  for (const auto& d : w.docs) {
    w.inputs.push_back(w.tokenizer.encode_document(d, &w.kb, config.max_seq_len));
  }
  return w;
}

struct GradCheckResult {
  std::size_t checked = 0;   // components at or above the magnitude floor
  std::size_t failures = 0;
  double max_rel_err = 0;
  std::string worst;  // "<name>[index]"
};

/// Central differences of `loss` for every component of every tensor. The
/// analytic gradient is computed once on a fresh tape. A component counts when
/// max(|analytic|, |numeric|) >= floor.
inline GradCheckResult gradcheck(const std::vector<kebio::NamedTensor>& params,
                                 const std::function<kebio::Tensor()>& loss, double step,
                                 double rel_tol, double floor) {
  for (const auto& p : params) {
    kebio::Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    kebio::Tape tape;
    tape.backward(loss());
  }
  GradCheckResult r;
  for (const auto& p : params) {
    kebio::Tensor t = p.tensor;
    const std::vector<kebio::real> analytic(t.grad().begin(), t.grad().end());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const kebio::real orig = data[i];
      data[i] = orig + static_cast<kebio::real>(step);
      const double up = loss().item();
      data[i] = orig - static_cast<kebio::real>(step);
      const double down = loss().item();
      data[i] = orig;
      const double numeric = (up - down) / (2 * step);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double mag = std::max(std::abs(a), std::abs(numeric));
      if (mag < floor) continue;
      ++r.checked;
      const double rel = std::abs(a - numeric) / mag;
      if (rel > r.max_rel_err) {
        r.max_rel_err = rel;
        r.worst = p.name + "[" + std::to_string(i) + "]";
      }
      if (rel > rel_tol) ++r.failures;
    }
  }
  return r;
}

inline bool bitwise_equal(const kebio::Tensor& a, const kebio::Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.data(), y = b.data();
  return std::memcmp(x.data(), y.data(), x.size() * sizeof(kebio::real)) == 0;
}

/// Log-probabilities that depend on position and on every committed token,
/// so that commit order changes scores.
class ContextScorer final : public kebio::MaskScorer {
 public:
  ContextScorer(std::size_t vocab, double phase) : vocab_(vocab), phase_(phase) {}
  std::size_t vocab_size() const override { return vocab_; }
  std::vector<std::vector<double>> log_probs(std::span<const int> ids,
                                             std::span<const std::size_t> positions) const override {
    double ctx = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != kebio::Vocabulary::kMask) ctx += 0.37 * ids[i] * double(i + 1);
    }
    std::vector<std::vector<double>> out;
    for (std::size_t p : positions) {
      std::vector<double> row(vocab_);
      double z = 0;
      for (std::size_t t = 0; t < vocab_; ++t) {
        row[t] = 3.0 * std::sin(1.3 * double(t) + 0.7 * double(p) + 0.11 * ctx + phase_);
        z += std::exp(row[t]);
      }
      for (double& v : row) v -= std::log(z);
      out.push_back(std::move(row));
    }
    return out;
  }

 private:
  std::size_t vocab_;
  double phase_;
};

/// Best accumulated log-probability of every fill over every commit order.
inline std::map<std::vector<int>, double> exhaustive_fills(const kebio::MaskScorer& scorer,
                                                           const std::vector<int>& ids) {
  const auto masks = kebio::mask_positions(ids);
  std::map<std::vector<int>, double> best;
  std::function<void(std::vector<int>&, std::vector<int>&, double)> rec =
      [&](std::vector<int>& cur, std::vector<int>& fill, double score) {
        std::vector<std::size_t> open, positions;
        for (std::size_t m = 0; m < masks.size(); ++m) {
          if (fill[m] == kebio::Vocabulary::kMask) {
            open.push_back(m);
            positions.push_back(masks[m]);
          }
        }
        if (open.empty()) {
          auto [it, fresh] = best.emplace(fill, score);
          if (!fresh) it->second = std::max(it->second, score);
          return;
        }
        const auto lps = scorer.log_probs(cur, positions);
        for (std::size_t i = 0; i < open.size(); ++i) {
          for (std::size_t t = kebio::Vocabulary::kNumReserved; t < lps[i].size(); ++t) {
            cur[masks[open[i]]] = static_cast<int>(t);
            fill[open[i]] = static_cast<int>(t);
            rec(cur, fill, score + lps[i][t]);
            fill[open[i]] = kebio::Vocabulary::kMask;
            cur[masks[open[i]]] = kebio::Vocabulary::kMask;
          }
        }
      };
  std::vector<int> cur = ids;
  std::vector<int> fill(masks.size(), kebio::Vocabulary::kMask);
  rec(cur, fill, 0.0);
  return best;
}

}  // namespace kebio_test
