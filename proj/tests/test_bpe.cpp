#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tokscope/bpe.hpp"
#include "tokscope/error.hpp"
#include "tokscope/rng.hpp"
#include "tokscope/unicode.hpp"

using namespace tokscope;

namespace {

LanguageCorpus corpus_of(std::vector<std::string> docs) {
  return LanguageCorpus(LanguageTag{"xx"}, std::move(docs));
}

// Repeat word `n` times as separate documents (word frequency weighting).
std::vector<std::string> repeat(const std::string& doc, int n) {
  return std::vector<std::string>(static_cast<std::size_t>(n), doc);
}

std::vector<std::string> unit_strings(const BpeModel& model, const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(model.unit(id));
  return out;
}

}  // namespace

TEST_CASE("train_bpe learns the single frequent merge") {
  // Words {"▁ab": 3, "▁cd": 1}; pair (a,b) has count 3, (c,d) only 1 < 2.
  std::vector<std::string> docs = repeat("▁ab", 3);
  docs.push_back("▁cd");
  const auto corpora = std::vector<LanguageCorpus>{corpus_of(docs)};
  // specials 5 + alphabet 5 (▁ a b c d) + 1 merge
  const BpeModel model = train_bpe(corpora, {11, 1000, 2});
  REQUIRE(model.merges().size() == 1);
  CHECK(model.merges()[0].left == "a");
  CHECK(model.merges()[0].right == "b");
  CHECK(model.merges()[0].result == "ab");
  CHECK(model.vocab_size() == 11);
}

TEST_CASE("the boundary symbol never participates in merges") {
  // Only the boundary-adjacent pair exists, so nothing merges.
  const auto corpora = std::vector<LanguageCorpus>{corpus_of(repeat("▁a", 5))};
  const BpeModel model = train_bpe(corpora, {100, 1000, 2});
  CHECK(model.merges().empty());
}

TEST_CASE("equal-frequency pairs merge lexicographically") {
  // "xy" and "ab" both occur 3 times; (a,b) < (x,y).
  std::vector<std::string> docs;
  for (int i = 0; i < 3; ++i) {
    docs.push_back("▁ab");
    docs.push_back("▁xy");
  }
  const auto corpora = std::vector<LanguageCorpus>{corpus_of(docs)};
  const BpeModel model = train_bpe(corpora, {11, 1000, 2});
  REQUIRE(model.merges().size() == 1);
  CHECK(model.merges()[0].left == "a");
  CHECK(model.merges()[0].right == "b");
}

TEST_CASE("train_bpe rejects bad inputs") {
  CHECK_THROWS_AS(train_bpe({}, {100, 1000, 2}), Error);
  const auto corpora = std::vector<LanguageCorpus>{corpus_of({"▁abcdef"})};
  // 5 specials + 7 characters > 10.
  CHECK_THROWS_AS(train_bpe(corpora, {10, 1000, 2}), Error);
}

TEST_CASE("vocabulary grows by exactly one unit per merge") {
  const auto corpora =
      std::vector<LanguageCorpus>{corpus_of(repeat("▁banana▁bandana", 4))};
  for (int merges = 0; merges <= 6; ++merges) {
    const int base = 5 + 5;  // specials + {▁ a b d n}
    const BpeModel model = train_bpe(corpora, {base + merges, 1000, 2});
    CHECK(model.vocab_size() == base + static_cast<int>(model.merges().size()));
    CHECK(static_cast<int>(model.merges().size()) <= merges);
  }
}

TEST_CASE("encode applies merges in priority order") {
  const BpeModel model(default_specials(), {"▁", "a", "b", "c"}, {{"a", "b", "ab", 0}});
  const auto ids = encode_bpe(model, "▁abc");
  CHECK(unit_strings(model, ids) == std::vector<std::string>{"▁", "ab", "c"});
}

TEST_CASE("encode of the empty string is empty") {
  const BpeModel model(default_specials(), {"a"}, {});
  CHECK(encode_bpe(model, "").empty());
}

TEST_CASE("out-of-alphabet characters emit UNK and block merges") {
  const BpeModel model(default_specials(), {"a", "b"}, {{"a", "b", "ab", 0}});
  const auto ids = encode_bpe(model, "azb");
  REQUIRE(ids.size() == 3);
  CHECK(model.unit(ids[0]) == "a");
  CHECK(ids[1] == model.unk_id());
  CHECK(model.unit(ids[2]) == "b");
}

TEST_CASE("cascading merges respect rank order") {
  const BpeModel model(default_specials(), {"a", "b", "c"},
                       {{"b", "c", "bc", 0}, {"a", "bc", "abc", 1}});
  const auto ids = encode_bpe(model, "abc");
  CHECK(unit_strings(model, ids) == std::vector<std::string>{"abc"});

  // Same-rank occurrences apply left to right: "aaa" with (a,a) -> [aa, a].
  const BpeModel doubler(default_specials(), {"a"}, {{"a", "a", "aa", 0}});
  CHECK(unit_strings(doubler, encode_bpe(doubler, "aaa")) ==
        std::vector<std::string>{"aa", "a"});
}

TEST_CASE("round-trip reproduces covered text") {
  std::vector<std::string> docs = {"▁the▁cat", "▁that▁hat", "▁at"};
  const auto corpora = std::vector<LanguageCorpus>{corpus_of(docs)};
  const BpeModel model = train_bpe(corpora, {30, 1000, 2});
  for (const auto& doc : docs) {
    CHECK(decode_bpe(model, encode_bpe(model, doc)) == doc);
  }

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text = "▁";
    const auto len = uniform_below(rng, 12) + 1;
    for (std::uint64_t i = 0; i < len; ++i) {
      static const char* pool[] = {"t", "h", "e", "c", "a", "▁"};
      text += pool[uniform_below(rng, 6)];
    }
    CAPTURE(text);
    CHECK(decode_bpe(model, encode_bpe(model, text)) == text);
  }
}

TEST_CASE("training equals the from-scratch recount oracle") {
  std::mt19937_64 rng(20240);
  for (int trial = 0; trial < 60; ++trial) {
    // Random corpus of <= 100 characters over a small alphabet.
    static const char* pool[] = {"a", "b", "c", "d"};
    std::vector<std::string> docs;
    std::uint64_t budget = 20 + uniform_below(rng, 80);
    while (budget > 0) {
      std::string doc = "▁";
      const auto words = uniform_below(rng, 3) + 1;
      for (std::uint64_t w = 0; w < words && budget > 0; ++w) {
        const auto len = uniform_below(rng, 6) + 1;
        for (std::uint64_t i = 0; i < len && budget > 0; ++i, --budget) {
          doc += pool[uniform_below(rng, 4)];
        }
        if (w + 1 < words) doc += "▁";
      }
      docs.push_back(doc);
    }
    const auto corpora = std::vector<LanguageCorpus>{corpus_of(docs)};
    const int vocab_size = 10 + static_cast<int>(uniform_below(rng, 20));
    const auto min_freq = uniform_below(rng, 3) + 1;

    const BpeModel model = train_bpe(corpora, {vocab_size, 1000, min_freq});
    const auto reference = oracles::train_bpe_reference(corpora, vocab_size, 1000, min_freq,
                                                        default_specials());
    CAPTURE(trial);
    REQUIRE(model.alphabet() == reference.alphabet);
    REQUIRE(model.merges().size() == reference.merges.size());
    for (std::size_t i = 0; i < reference.merges.size(); ++i) {
      CHECK(model.merges()[i].left == reference.merges[i].first);
      CHECK(model.merges()[i].right == reference.merges[i].second);
    }
  }
}

TEST_CASE("alphabet cap drops the rarest characters") {
  // 'z' appears once; alphabet of 3 keeps {▁, a, b}.
  std::vector<std::string> docs = repeat("▁ab", 3);
  docs.push_back("▁z");
  const auto corpora = std::vector<LanguageCorpus>{corpus_of(docs)};
  const BpeModel model = train_bpe(corpora, {20, 3, 2});
  CHECK(model.alphabet() == std::vector<std::string>{"▁", "a", "b"});
  const auto ids = encode_bpe(model, "▁z");
  REQUIRE(ids.size() == 2);
  CHECK(ids[1] == model.unk_id());
}
