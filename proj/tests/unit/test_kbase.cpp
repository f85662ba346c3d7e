#include <gtest/gtest.h>

#include <fstream>

#include "kebio/kbase/corpus.hpp"
#include "kebio/kbase/knowledge_base.hpp"
#include "support.hpp"

namespace {

using namespace kebio;
using kebio_test::TempDir;

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

TEST(KnowledgeBase, LoadsThreeEntitiesAndOneTriplet) {
  TempDir dir("kb3");
  write(dir / "lexicon.tsv",
        "C1\taspirin\tasa|acetylsalicylic acid\nC2\theadache\t\nC3\tfever\tpyrexia\n");
  write(dir / "triplets.tsv", "C1\tmay_prevent\tC2\n");
  const KnowledgeBase kb = KnowledgeBase::load_dir(dir.path(), 4);
  EXPECT_EQ(kb.size(), 3u);
  EXPECT_EQ(kb.triplets().size(), 1u);
  EXPECT_EQ(kb.names(0), (std::vector<std::string>{"aspirin", "asa", "acetylsalicylic acid"}));
  EXPECT_EQ(kb.names(1), (std::vector<std::string>{"headache"}));
  EXPECT_EQ(kb.embeddings().shape(), (Shape{3, 4}));
  EXPECT_EQ(*kb.index_of("C3"), 2u);
}

TEST(KnowledgeBase, UnknownTripletEntityNamesTheLine) {
  TempDir dir("kbbad");
  write(dir / "lexicon.tsv", "C1\ta\t\nC2\tb\t\n");
  write(dir / "triplets.tsv", "C1\trel\tC2\nC1\trel\tC9\n");
  try {
    KnowledgeBase::load_dir(dir.path(), 4);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("C9"), std::string::npos) << e.what();
  }
}

TEST(KnowledgeBase, DuplicateEntityIsRejected) {
  EXPECT_THROW(KnowledgeBase({"C1", "C1"}, {{"a"}, {"b"}}, {}, 2), DataError);
}

TEST(KnowledgeBase, RoundTripThirtyEntitiesFiftyTriplets) {
  std::vector<Triplet> triplets;
  Rng rng(3);
  KnowledgeBase probe = kebio_test::synthetic_kb(30, 8);
  for (int i = 0; i < 50; ++i) {
    triplets.push_back({probe.entity(rng.below(30)), i % 3 ? "may_treat" : "part_of",
                        probe.entity(rng.below(30))});
  }
  const KnowledgeBase kb = kebio_test::synthetic_kb(30, 8, triplets);
  TempDir dir("kbrt");
  kb.save_dir(dir.path());
  const KnowledgeBase back = KnowledgeBase::load_dir(dir.path(), 8);
  EXPECT_EQ(back.entities(), kb.entities());
  EXPECT_EQ(back.triplets(), kb.triplets());
  for (std::size_t i = 0; i < kb.size(); ++i) EXPECT_EQ(back.names(i), kb.names(i));
  EXPECT_EQ(back.order_digest(), kb.order_digest());
  // Saving the reloaded KB reproduces the files byte for byte.
  TempDir again("kbrt2");
  back.save_dir(again.path());
  for (const char* f : {"lexicon.tsv", "triplets.tsv"}) {
    std::ifstream a(dir / f, std::ios::binary), b(again / f, std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
              std::string(std::istreambuf_iterator<char>(b), {}));
  }
}

TEST(KnowledgeBase, RelationsInFirstSeenOrder) {
  const KnowledgeBase kb = kebio_test::synthetic_kb(
      3, 2, {{"C0000000", "b_rel", "C0000001"}, {"C0000001", "a_rel", "C0000002"},
             {"C0000002", "b_rel", "C0000000"}});
  EXPECT_EQ(kb.relations(), (std::vector<std::string>{"b_rel", "a_rel"}));
}

TEST(KnowledgeBase, EmbeddingRowsMustMatchEntities) {
  KnowledgeBase kb = kebio_test::synthetic_kb(3, 2);
  EXPECT_THROW(kb.set_embeddings(Tensor::zeros({2, 2})), DimensionError);
}

TEST(MentionMap, NoMentionsIsAllNil) {
  AnnotatedDocument d{{"a", "b", "c"}, {}};
  for (const auto& m : mention_map(d)) EXPECT_FALSE(m.has_value());
}

TEST(MentionMap, SingleMentionCoversItsTokens) {
  AnnotatedDocument d{{"t0", "t1", "t2", "t3", "t4"}, {{1, 3, "C1"}}};
  const auto m = mention_map(d);
  ASSERT_EQ(m.size(), 5u);
  EXPECT_FALSE(m[0]);
  EXPECT_EQ(m[1], 0u);
  EXPECT_EQ(m[2], 0u);
  EXPECT_FALSE(m[3]);
  EXPECT_FALSE(m[4]);
}

TEST(MentionMap, AgreesWithContainmentScan) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    AnnotatedDocument d;
    const std::size_t n = 1 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) d.tokens.push_back("w" + std::to_string(i));
    std::size_t pos = 0;
    while (pos < n) {
      pos += rng.below(4);
      if (pos >= n) break;
      const std::size_t len = 1 + rng.below(std::min<std::size_t>(3, n - pos));
      d.mentions.push_back({pos, pos + len, rng.below(2) ? std::optional<std::string>("C1")
                                                          : std::nullopt});
      pos += len;
    }
    const auto map = mention_map(d);
    for (std::size_t t = 0; t < n; ++t) {
      std::optional<std::size_t> expect;
      for (std::size_t m = 0; m < d.mentions.size(); ++m) {
        if (d.mentions[m].start <= t && t < d.mentions[m].end) expect = m;
      }
      EXPECT_EQ(map[t], expect);
    }
  }
}

TEST(Corpus, OverlappingMentionsAreInvalid) {
  AnnotatedDocument d{{"a", "b", "c"}, {{0, 2, "C1"}, {1, 3, "C2"}}};
  EXPECT_THROW(d.validate(), DataError);
  AnnotatedDocument empty_span{{"a"}, {{0, 0, "C1"}}};
  EXPECT_THROW(empty_span.validate(), DataError);
}

TEST(Corpus, JsonLineRoundTripIncludingNil) {
  AnnotatedDocument d{{"Aspirin", "eases", "pain", "\"quoted\""}, {{0, 1, "C1"}, {2, 3, std::nullopt}}};
  EXPECT_EQ(parse_json_line(to_json_line(d)), d);
}

TEST(Corpus, FileRoundTrip) {
  const KnowledgeBase kb = kebio_test::synthetic_kb(10, 2);
  const auto docs = kebio_test::synthetic_corpus(kb, 25, 4);
  TempDir dir("corpus");
  write_corpus(dir / "c.jsonl", docs);
  EXPECT_EQ(read_corpus(dir / "c.jsonl"), docs);
}

TEST(Corpus, MalformedLineIsDataError) {
  EXPECT_THROW(parse_json_line("{\"tokens\": [\"a\"], \"mentions\": [{\"start\": 0}]}"), DataError);
  EXPECT_THROW(parse_json_line("not json"), DataError);
}

}  // namespace
