#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "tokscope/bpe.hpp"
#include "tokscope/error.hpp"
#include "tokscope/merge.hpp"
#include "tokscope/model_io.hpp"

using namespace tokscope;
namespace fs = std::filesystem;

namespace {

UnigramModel model_from_probs(std::vector<std::pair<std::string, double>> probs) {
  for (auto& [unit, p] : probs) p = std::log(p);
  return UnigramModel(ScoredVocabulary(default_specials(), std::move(probs)));
}

std::string roundtrip_twice(const TokenizerModel& model) {
  const std::string once = model_to_json(model);
  const std::string again = model_to_json(model_from_json(once));
  REQUIRE(once == again);
  return once;
}

}  // namespace

TEST_CASE("bpe model JSON round-trips byte-identically") {
  const BpeModel bpe(default_specials(), {"▁", "a", "b", "c"},
                     {{"a", "b", "ab", 0}, {"ab", "c", "abc", 1}});
  const TokenizerModel model(bpe, {LanguageTag{"en"}, LanguageTag{"tr"}});
  const std::string json = roundtrip_twice(model);
  CHECK(json.find("\"type\":\"bpe\"") != std::string::npos);
  CHECK(json.find("\"merges\":[[\"a\",\"b\"],[\"ab\",\"c\"]]") != std::string::npos);

  const TokenizerModel loaded = model_from_json(json);
  CHECK(loaded.is_bpe());
  CHECK(loaded.languages().size() == 2);
  CHECK(loaded.bpe().merge_priority(loaded.bpe().find("a"), loaded.bpe().find("b")) == 0);
}

TEST_CASE("unigram model JSON preserves log probs bit-exactly") {
  const UnigramModel unigram = model_from_probs({{"a", 1.0 / 3.0}, {"bc", 2.0 / 3.0}});
  const TokenizerModel model(unigram, {LanguageTag{"xx"}});
  const std::string json = roundtrip_twice(model);

  const TokenizerModel loaded = model_from_json(json);
  REQUIRE(loaded.is_unigram());
  for (int id = 0; id < loaded.vocab_size(); ++id) {
    CHECK(loaded.unigram().vocab().entry(id).log_prob ==
          unigram.vocab().entry(id).log_prob);
  }
}

TEST_CASE("tokmix models carry their provenance header") {
  const UnigramModel base = model_from_probs({{"a", 0.5}, {"b", 0.5}});
  MixWeights weights;
  weights.weights = {{"en", 0.75}, {"es", 0.25}};
  const TokenizerModel model(base, weights);
  const std::string json = roundtrip_twice(model);
  CHECK(json.find("\"method\":\"tokmix\"") != std::string::npos);
  CHECK(json.find("\"en\":0.75") != std::string::npos);

  const TokenizerModel loaded = model_from_json(json);
  CHECK(loaded.method() == "tokmix");
  REQUIRE(loaded.weights().has_value());
  CHECK(loaded.weights()->weights.at("es") == 0.25);
}

TEST_CASE("no_overlap model JSON keeps segments and offsets") {
  const std::vector<std::pair<LanguageTag, UnigramModel>> models = {
      {LanguageTag{"en"}, model_from_probs({{"a", 0.6}, {"b", 0.4}})},
      {LanguageTag{"es"}, model_from_probs({{"a", 0.3}, {"c", 0.7}})}};
  const TokenizerModel model(merge_no_overlap(models, default_specials()));
  const std::string json = roundtrip_twice(model);

  const TokenizerModel loaded = model_from_json(json);
  REQUIRE(loaded.is_no_overlap());
  CHECK(loaded.no_overlap().id_range(LanguageTag{"en"}) == std::pair<int, int>{5, 7});
  CHECK(loaded.no_overlap().id_range(LanguageTag{"es"}) == std::pair<int, int>{7, 9});
  CHECK(loaded.vocab_size() == 9);
}

TEST_CASE("save/load round-trips through the filesystem") {
  const fs::path path = fs::temp_directory_path() / "tokscope_model.json";
  const TokenizerModel model(model_from_probs({{"a", 0.25}, {"b", 0.75}}),
                             {LanguageTag{"xx"}});
  save_model(model, path);
  const TokenizerModel loaded = load_model(path);
  CHECK(model_to_json(loaded) == model_to_json(model));
  CHECK(model_hash(loaded) == model_hash(model));
}

TEST_CASE("model hashes differ when content differs") {
  const TokenizerModel a(model_from_probs({{"a", 0.5}, {"b", 0.5}}), {LanguageTag{"xx"}});
  const TokenizerModel b(model_from_probs({{"a", 0.4}, {"b", 0.6}}), {LanguageTag{"xx"}});
  CHECK(model_hash(a) != model_hash(b));
  CHECK(model_hash(a).size() == 16);
}

TEST_CASE("malformed model files are rejected") {
  CHECK_THROWS_AS(model_from_json("not json"), Error);
  CHECK_THROWS_AS(model_from_json("{\"type\":\"mystery\"}"), Error);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), Error);
}

TEST_CASE("units with JSON metacharacters survive serialization") {
  const UnigramModel tricky = model_from_probs({{"\"", 0.3}, {"\\", 0.3}, {"a\"b", 0.4}});
  const TokenizerModel model(tricky, {LanguageTag{"xx"}});
  const TokenizerModel loaded = model_from_json(model_to_json(model));
  CHECK(loaded.unigram().vocab().find("\"").has_value());
  CHECK(loaded.unigram().vocab().find("\\").has_value());
  CHECK(loaded.unigram().vocab().find("a\"b").has_value());
}
