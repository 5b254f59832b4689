#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tokscope/analysis.hpp"
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

}  // namespace

TEST_CASE("center_by_group subtracts per-group means") {
  ObservationTable table;
  table.add("tok1", "en", "f1", 3.0);
  table.add("tok2", "en", "f1", 5.0);
  const ObservationTable centered = center_by_group(table, "f1");
  CHECK(centered.rows()[0].values.at("f1") == doctest::Approx(-1.0));
  CHECK(centered.rows()[1].values.at("f1") == doctest::Approx(1.0));

  SUBCASE("single tokenizer per group centers to zero") {
    ObservationTable solo;
    solo.add("tok1", "en", "f1", 42.0);
    solo.add("tok1", "es", "f1", -3.0);
    for (const auto& row : center_by_group(solo, "f1").rows()) {
      CHECK(row.values.at("f1") == doctest::Approx(0.0));
    }
  }
  SUBCASE("per-group sums vanish on a 2x3 table") {
    ObservationTable grid;
    int v = 0;
    for (const char* tok : {"t1", "t2", "t3"}) {
      for (const char* lang : {"en", "es"}) {
        grid.add(tok, lang, "f1", static_cast<double>(v++ * v));
      }
    }
    const ObservationTable centered_grid = center_by_group(grid, "f1");
    std::map<std::string, double> sums;
    for (const auto& row : centered_grid.rows()) sums[row.group_key] += row.values.at("f1");
    for (const auto& [group, sum] : sums) CHECK(sum == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("идempotent") {
    const auto once = center_by_group(table, "f1");
    const auto twice = center_by_group(once, "f1");
    for (std::size_t i = 0; i < once.rows().size(); ++i) {
      CHECK(twice.rows()[i].values.at("f1") ==
            doctest::Approx(once.rows()[i].values.at("f1")).epsilon(1e-12));
    }
  }
  SUBCASE("unknown metric errors") {
    CHECK_THROWS_AS(center_by_group(table, "nope"), Error);
  }
}

TEST_CASE("observation tables reject duplicate (tokenizer, group, metric)") {
  ObservationTable table;
  table.add("t", "g", "m", 1.0);
  CHECK_THROWS_AS(table.add("t", "g", "m", 2.0), Error);
  table.add("t", "g", "m2", 2.0);  // other metrics on the same row are fine
}

TEST_CASE("spearman matches the closed-form rank formula") {
  // x = [1,2,3,4], y = [2,1,4,3]: rho = 1 - 6*4 / (4*15) = 0.6.
  const auto result = spearman({1, 2, 3, 4}, {2, 1, 4, 3}, 7);
  CHECK(result.rho == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(result.n == 4);

  SUBCASE("monotone increasing gives +1") {
    CHECK(spearman({1, 2, 3, 5}, {10, 20, 21, 400}, 7).rho == doctest::Approx(1.0));
  }
  SUBCASE("monotone decreasing gives -1") {
    CHECK(spearman({1, 2, 3, 5}, {8, 4, 2, 1}, 7).rho == doctest::Approx(-1.0));
  }
  SUBCASE("invariant under monotone transforms") {
    const auto base = spearman({1, 2, 3, 4, 5}, {3, 1, 4, 1.5, 9}, 7);
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {3, 1, 4, 1.5, 9};
    for (auto& v : x) v = std::exp(v);
    for (auto& v : y) v = v * v * v;
    const auto transformed = spearman(x, y, 7);
    CHECK(transformed.rho == doctest::Approx(base.rho).epsilon(1e-12));
  }
  SUBCASE("self correlation is 1") {
    const std::vector<double> x = {3, 1, 4, 1.5, 9, 2.6};
    CHECK(spearman(x, x, 7).rho == doctest::Approx(1.0));
  }
  SUBCASE("ties use average ranks") {
    // scipy spearmanr([1,2,2,3], [1,2,3,4]) = 0.9428090415820632.
    const auto tied = spearman({1, 2, 2, 3}, {1, 2, 3, 4}, 7);
    CHECK(tied.rho == doctest::Approx(0.9428090415820632).epsilon(1e-12));
  }
}

TEST_CASE("spearman rejects degenerate inputs") {
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2}, 7), Error);
  CHECK_THROWS_AS(spearman({1, 2, 3}, {1, 2}, 7), Error);
  CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}, 7), Error);
}

TEST_CASE("permutation p-values are small for perfect correlation") {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    y.push_back(2.0 * i + 1.0);
  }
  const auto result = spearman(x, y, 7);
  CHECK(result.rho == doctest::Approx(1.0));
  CHECK(result.p_value < 0.01);

  // Same seed, same p-value.
  CHECK(spearman(x, y, 7).p_value == result.p_value);
}

TEST_CASE("scores CSV parses the long format") {
  const fs::path path = fs::temp_directory_path() / "tokscope_scores.csv";
  {
    std::ofstream out(path);
    out << "tokenizer,group_key,metric,value\n";
    out << "uni,en,pos,55.1\n";
    out << "uni,en-es,jsd_ext,0.4\n";
    out << "bpe,en,pos,60.2\n";
  }
  const ObservationTable table = ObservationTable::from_csv(path);
  CHECK(table.rows().size() == 3);
  CHECK(table.metric_names() == std::vector<std::string>{"jsd_ext", "pos"});

  {
    std::ofstream out(path);
    out << "wrong,header\n";
  }
  CHECK_THROWS_AS(ObservationTable::from_csv(path), Error);
}

TEST_CASE("build_report assembles allocation and overlap sections") {
  const std::vector<std::pair<std::string, TokenizerModel>> models = {
      {"uni", TokenizerModel(model_from_probs({{"a", 0.4}, {"b", 0.3}, {"c", 0.3}}),
                             {LanguageTag{"aa"}})},
      {"mix", TokenizerModel(model_from_probs({{"a", 0.5}, {"b", 0.25}, {"c", 0.25}}),
                             {LanguageTag{"aa"}})}};
  const std::vector<LanguageCorpus> corpora = {
      LanguageCorpus(LanguageTag{"l1"}, {"ab", "ba"}),
      LanguageCorpus(LanguageTag{"l2"}, {"bc", "cb"}),
      LanguageCorpus(LanguageTag{"l3"}, {"ac", "ca"})};

  const MetricsReport report = build_report(models, corpora, std::nullopt, 7);
  // 2 models x 3 languages.
  CHECK(report.allocation.size() == 6);
  REQUIRE(report.overlap.size() == 2);
  CHECK(report.overlap[0].matrix.size() == 3);
  CHECK(!report.has_external_scores);
  CHECK(report.correlations.empty());

  // Deterministic: same inputs, byte-identical JSON.
  const MetricsReport again = build_report(models, corpora, std::nullopt, 7);
  CHECK(report_to_json(report) == report_to_json(again));
}

TEST_CASE("build_report with a NoOverlap model yields all-ones off-diagonal JSD") {
  const std::vector<std::pair<LanguageTag, UnigramModel>> monolingual = {
      {LanguageTag{"l1"}, model_from_probs({{"a", 0.5}, {"b", 0.5}})},
      {LanguageTag{"l2"}, model_from_probs({{"b", 0.5}, {"c", 0.5}})},
      {LanguageTag{"l3"}, model_from_probs({{"a", 0.5}, {"c", 0.5}})}};
  const std::vector<std::pair<std::string, TokenizerModel>> models = {
      {"noov", TokenizerModel(merge_no_overlap(monolingual, default_specials()))}};
  const std::vector<LanguageCorpus> corpora = {
      LanguageCorpus(LanguageTag{"l1"}, {"ab", "ba"}),
      LanguageCorpus(LanguageTag{"l2"}, {"bc", "cb"}),
      LanguageCorpus(LanguageTag{"l3"}, {"ac", "ca"})};

  const MetricsReport report = build_report(models, corpora, std::nullopt, 7);
  REQUIRE(report.overlap.size() == 1);
  const auto& matrix = report.overlap[0].matrix;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      CHECK(matrix[i][j] == (i == j ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("build_report joins external scores into correlations") {
  const std::vector<std::pair<std::string, TokenizerModel>> models = {
      {"m1", TokenizerModel(model_from_probs({{"a", 0.6}, {"b", 0.2}, {"ab", 0.2}}),
                            {LanguageTag{"aa"}})},
      {"m2", TokenizerModel(model_from_probs({{"a", 0.3}, {"b", 0.3}, {"ab", 0.4}}),
                            {LanguageTag{"aa"}})},
      {"m3", TokenizerModel(model_from_probs({{"a", 0.2}, {"b", 0.2}, {"ab", 0.6}}),
                            {LanguageTag{"aa"}})}};
  const std::vector<LanguageCorpus> corpora = {
      LanguageCorpus(LanguageTag{"l1"}, {"abab", "ab"}),
      LanguageCorpus(LanguageTag{"l2"}, {"ba", "abba"})};

  ObservationTable scores;
  for (const char* model : {"m1", "m2", "m3"}) {
    for (const char* lang : {"l1", "l2"}) {
      scores.add(model, lang, "pos", model[1] * 10.0 + lang[1]);
      scores.add(model, lang, "mrr", 0.5 - model[1] * 0.05);
    }
  }
  const MetricsReport report = build_report(models, corpora, scores, 7);
  CHECK(report.has_external_scores);
  CHECK(report.mrr.size() == 6);
  CHECK(!report.correlations.empty());
  for (const auto& c : report.correlations) {
    CHECK(std::abs(c.rho) <= 1.0);
    CHECK(c.p_value > 0.0);
    CHECK(c.p_value <= 1.0);
    CHECK(c.n >= 3);
  }

  // No-scores report omits the sections.
  const MetricsReport plain = build_report(models, corpora, std::nullopt, 7);
  const std::string json = report_to_json(plain);
  CHECK(json.find("correlations") == std::string::npos);
  CHECK(json.find("\"mrr\"") == std::string::npos);
}

TEST_CASE("export_matrix writes a labeled 4-decimal TSV") {
  const fs::path path = fs::temp_directory_path() / "tokscope_matrix.tsv";
  export_matrix({"en", "es"}, {{0.0, 0.75}, {0.75, 0.0}}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "\ten\tes");
  std::getline(in, line);
  CHECK(line == "en\t0.0000\t0.7500");
  std::getline(in, line);
  CHECK(line == "es\t0.7500\t0.0000");

  SUBCASE("round-trip parse reproduces the values to 4 decimals") {
    std::ifstream re(path);
    std::string header;
    std::getline(re, header);
    std::vector<std::vector<double>> parsed;
    while (std::getline(re, line)) {
      std::vector<double> row;
      std::size_t pos = line.find('\t');
      while (pos != std::string::npos) {
        const std::size_t next = line.find('\t', pos + 1);
        row.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
        pos = next;
      }
      parsed.push_back(row);
    }
    CHECK(parsed[0][1] == doctest::Approx(0.75).epsilon(1e-4));
    CHECK(parsed[1][0] == doctest::Approx(0.75).epsilon(1e-4));
  }

  SUBCASE("asymmetric matrices are rejected") {
    CHECK_THROWS_AS(export_matrix({"a", "b"}, {{0.0, 0.1}, {0.2, 0.0}}, path), Error);
    CHECK_THROWS_AS(export_matrix({"a"}, {{0.0, 0.1}}, path), Error);
  }
}
