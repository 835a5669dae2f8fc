// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "seqloss/corpus.hpp"
#include "seqloss/error.hpp"
#include "seqloss/random.hpp"
#include "seqloss/synthetic.hpp"
#include "test_support.hpp"

using namespace seqloss;
using seqloss::testing::TempDir;
using seqloss::testing::words;
using seqloss::testing::write_text;

namespace {

RawRecord rec(const std::string &id, const std::string &code, const std::string &summary) {
  return {id, words(code), words(summary)};
}

}  // namespace

TEST_CASE("specials occupy ids 0..3") {
  Vocabulary v;
  CHECK(v.size() == 4);
  CHECK(v.id("<s>") == kStartId);
  CHECK(v.id("</s>") == kEndId);
  CHECK(v.id("<pad>") == kPadId);
  CHECK(v.id("<unk>") == kUnknownId);
  CHECK(v.id("anything") == kUnknownId);
  CHECK_THROWS_AS(Vocabulary::from_tokens({"a", "b"}), ConfigError);
  CHECK_THROWS_AS(Vocabulary::from_tokens({"<s>", "</s>", "<pad>", "<unk>", "x", "x"}), ConfigError);
}

TEST_CASE("vocabulary ordering: frequency, then lexicographic") {
  std::vector<std::vector<std::string>> sents = {words("b a c a"), words("c a d"), words("b")};
  auto v = Vocabulary::build(sents, 100);
  // a:3, b:2, c:2, d:1
  CHECK(v.tokens() == std::vector<std::string>{"<s>", "</s>", "<pad>", "<unk>", "a", "b", "c", "d"});
  auto capped = Vocabulary::build(sents, 6);
  CHECK(capped.size() == 6);
  CHECK(capped.id("c") == kUnknownId);
  CHECK_THROWS_AS(Vocabulary::build(sents, 3), ConfigError);
}

TEST_CASE("vocabulary maps are exact inverses and round trip") {
  const auto recs = synthetic_records(120, 3);
  std::vector<std::vector<std::string>> sents;
  for (const auto &r : recs) sents.push_back(r.summary);
  auto v = Vocabulary::build(sents, 10000);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.id(v.token(static_cast<TokenId>(i))) == static_cast<TokenId>(i));
  for (const auto &s : sents) CHECK(v.decode(v.encode(s)) == s);
  CHECK_THROWS_AS(v.token(static_cast<TokenId>(v.size())), std::out_of_range);
}

TEST_CASE("property: higher frequency never gets a larger id") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<std::string>> sents(30);
    std::map<std::string, int> freq;
    for (auto &s : sents) {
      const std::size_t len = 1 + rng.below(8);
      for (std::size_t k = 0; k < len; ++k) {
        s.push_back("t" + std::to_string(rng.below(15)));
        ++freq[s.back()];
      }
    }
    auto v = Vocabulary::build(sents, 1000);
    for (const auto &[a, fa] : freq)
      for (const auto &[b, fb] : freq)
        if (fa > fb) CHECK(v.id(a) < v.id(b));
  }
}

TEST_CASE("vocabulary save/load") {
  TempDir dir("vocab");
  auto v = Vocabulary::build(std::vector<std::vector<std::string>>{words("x y z y")}, 50);
  v.save(dir / "v.txt");
  CHECK(Vocabulary::load(dir / "v.txt") == v);
}

TEST_CASE("encode a single record") {
  auto corpus = make_corpus({rec("1", "public void f ( )", "does nothing")}, {}, {}, CorpusLimits{});
  const auto &s = corpus.train.at(0);
  CHECK(s.code_ids.size() == 5);
  const std::vector<TokenId> expect = {kStartId, corpus.summary_vocab.id("does"), corpus.summary_vocab.id("nothing"),
                                       kEndId};
  CHECK(s.summary_ids == expect);
  CHECK(s.target_count() == 3);
  CHECK(corpus.summary_vocab.id("does") >= kNumSpecials);
}

TEST_CASE("truncation: 20-word summary keeps start plus 12 words") {
  std::string summary;
  for (int i = 0; i < 20; ++i) summary += "w" + std::to_string(i) + " ";
  std::string code;
  for (int i = 0; i < 70; ++i) code += "c" + std::to_string(i) + " ";
  auto corpus = make_corpus({rec("1", code, summary)}, {}, {}, CorpusLimits{});
  const auto &s = corpus.train[0];
  CHECK(s.summary_ids.size() == 13);
  CHECK(s.summary_ids.front() == kStartId);
  CHECK(std::find(s.summary_ids.begin(), s.summary_ids.end(), kEndId) == s.summary_ids.end());
  CHECK(s.code_ids.size() == 50);
  CHECK(s.source_code_len == 70);
  CHECK(s.reference_tokens.size() == 20);
  // Code tokens past t never enter the vocabulary.
  CHECK_FALSE(corpus.code_vocab.contains("c60"));
}

TEST_CASE("tokens only seen outside train map to unknown") {
  auto corpus = make_corpus({rec("a", "int f ( )", "returns a value")}, {rec("b", "int g ( )", "returns zebra")},
                            {rec("c", "void quux ( )", "does quux")}, CorpusLimits{});
  CHECK_FALSE(corpus.summary_vocab.contains("zebra"));
  CHECK_FALSE(corpus.code_vocab.contains("quux"));
  CHECK(corpus.val[0].summary_ids[2] == kUnknownId);
  CHECK(corpus.test[0].code_ids[1] == kUnknownId);
}

TEST_CASE("lowercasing") {
  TempDir dir("lower");
  write_text(dir / "t.jsonl", R"({"id":"a","code":"Public VOID f","summary":"Returns The Value"})"
                              "\n");
  auto corpus = make_corpus(read_records(dir / "t.jsonl"), {}, {}, CorpusLimits{});
  CHECK(corpus.summary_vocab.contains("returns"));
  CHECK(corpus.train[0].reference_tokens == words("returns the value"));
}

TEST_CASE("corpus errors") {
  CHECK_THROWS_AS(make_corpus({}, {}, {}, CorpusLimits{}), ConfigError);
  CHECK_THROWS_AS(make_corpus({rec("a", "x", "y")}, {rec("a", "x", "y")}, {}, CorpusLimits{}), ConfigError);

  TempDir dir("corpus");
  write_text(dir / "train.jsonl", R"({"id":"1","code":"a b","summary":"c d"})"
                                  "\n\n"
                                  R"({"id":"2","code":"a b"})"
                                  "\n");
  write_text(dir / "ok.jsonl", R"({"id":"9","code":"a","summary":"b"})"
                               "\n");
  try {
    read_records(dir / "train.jsonl");
    FAIL("expected FormatError");
  } catch (const FormatError &e) {
    CHECK(e.line() == 3);
  }
  write_text(dir / "bad.jsonl", "{not json\n");
  CHECK_THROWS_AS(read_records(dir / "bad.jsonl"), FormatError);
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", dir / "ok.jsonl", dir / "ok.jsonl", CorpusLimits{}),
                  ConfigError);
  write_text(dir / "empty.jsonl", "");
  CHECK_THROWS_AS(load_corpus(dir / "empty.jsonl", dir / "ok.jsonl", dir / "ok.jsonl", CorpusLimits{}), ConfigError);
}

TEST_CASE("batchify sizes, padding and determinism") {
  std::vector<RawRecord> recs;
  for (int i = 0; i < 101; ++i) recs.push_back(rec(std::to_string(i), "a b c", "x y"));
  auto corpus = make_corpus(recs, {}, {}, CorpusLimits{});
  auto batches = batchify(corpus.train, 50, std::nullopt);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 50);
  CHECK(batches[1].size() == 50);
  CHECK(batches[2].size() == 1);

  auto a = batchify(corpus.train, 50, 5);
  auto b = batchify(corpus.train, 50, 5);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].indices == b[k].indices);
  std::vector<std::size_t> all;
  for (const auto &batch : a) all.insert(all.end(), batch.indices.begin(), batch.indices.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(101);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  CHECK(all == expect);
  CHECK(a[0].indices != batches[0].indices);

  // Summaries of 4 and 7 ids padded to 7.
  auto two = make_corpus({rec("p", "a", "one two"), rec("q", "a b", "one two three four five")}, {}, {},
                         CorpusLimits{});
  auto pb = batchify(two.train, 2, std::nullopt);
  REQUIRE(pb.size() == 1);
  CHECK(pb[0].summary_ids[0].size() == 7);
  CHECK(pb[0].summary_ids[1].size() == 7);
  CHECK(std::count(pb[0].summary_mask[0].begin(), pb[0].summary_mask[0].end(), 1) == 4);
  CHECK(std::count(pb[0].summary_mask[1].begin(), pb[0].summary_mask[1].end(), 1) == 7);
  CHECK(pb[0].summary_ids[0][5] == kPadId);
  CHECK(pb[0].summary(0).size() == 4);
  CHECK(pb[0].code(1).size() == 2);
  CHECK_THROWS_AS(batchify(two.train, 0, std::nullopt), std::invalid_argument);
}

TEST_CASE("synthetic corpus is deterministic and id-disjoint") {
  auto a = synthetic_splits(50, 10, 10, 7);
  auto b = synthetic_splits(50, 10, 10, 7);
  CHECK(a.train.size() == 50);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].code == b.train[i].code);
    CHECK(a.train[i].summary == b.train[i].summary);
  }
  CHECK_NOTHROW(make_corpus(a.train, a.val, a.test, CorpusLimits{}));
  auto stats = corpus_stats(make_corpus(a.train, a.val, a.test, CorpusLimits{}));
  CHECK(stats.train.samples == 50);
  CHECK(stats.test.samples == 10);
}
