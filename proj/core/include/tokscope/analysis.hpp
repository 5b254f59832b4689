#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tokscope/corpus.hpp"
#include "tokscope/metrics.hpp"
#include "tokscope/model.hpp"

namespace tokscope {

/// Long-format observations: one row per (tokenizer, group_key) holding named
/// metric values. group_key is a language code or a "src-tgt" language pair.
class ObservationTable {
 public:
  struct Row {
    std::string tokenizer;
    std::string group_key;
    std::map<std::string, double> values;
  };

  ObservationTable() = default;
  explicit ObservationTable(std::vector<Row> rows);

  const std::vector<Row>& rows() const { return rows_; }
  std::vector<std::string> metric_names() const;

  /// Adds value under (tokenizer, group_key, metric); throws Error when the
  /// metric is already set for that row.
  void add(const std::string& tokenizer, const std::string& group_key,
           const std::string& metric, double value);

  /// CSV with header "tokenizer,group_key,metric,value".
  static ObservationTable from_csv(const std::filesystem::path& path);

 private:
  std::vector<Row> rows_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

/// Replaces each value of `metric` by value minus the mean over its group
/// (across tokenizers), so per-group sums become 0. Idempotent.
ObservationTable center_by_group(const ObservationTable& table, const std::string& metric);

struct CorrelationResult {
  std::string metric_x;
  std::string metric_y;
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

inline constexpr int kSpearmanPermutations = 10'000;

/// Spearman rank correlation with average ranks for ties and a two-sided
/// seeded permutation p-value. Throws Error on length mismatch, n < 3, or a
/// constant input.
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                           std::uint64_t seed, int permutations = kSpearmanPermutations);

struct MetricsReport {
  struct Allocation {
    std::string model;
    std::string language;
    double average_rank = 0.0;
    std::uint64_t ar_tie_count = 0;
    double chars_per_token = 0.0;
    std::uint64_t total_tokens = 0;
    std::uint64_t total_chars = 0;
  };
  struct Overlap {
    std::string model;
    std::vector<std::string> languages;
    std::vector<std::vector<double>> matrix;  // symmetric, zero diagonal
  };

  std::vector<Allocation> allocation;
  std::vector<Overlap> overlap;
  std::vector<ObservationTable::Row> mrr;        // rows of external metric "mrr"
  std::vector<CorrelationResult> correlations;   // present when scores supplied
  bool has_external_scores = false;
};

/// Computes AR/CPT per (model, language) and the pairwise JSD matrix per
/// model; when external scores are supplied, adds the group-centered Spearman
/// correlations between tokenizer measures and every external metric.
MetricsReport build_report(const std::vector<std::pair<std::string, TokenizerModel>>& models,
                           const std::vector<LanguageCorpus>& corpora,
                           const std::optional<ObservationTable>& external_scores,
                           std::uint64_t seed);

/// Single deterministic JSON document {allocation, overlap, mrr?, correlations?}.
std::string report_to_json(const MetricsReport& report);
void save_report(const MetricsReport& report, const std::filesystem::path& path);

/// TSV with a header row/column of language codes; values to 4 decimals.
void export_matrix(const std::vector<std::string>& languages,
                   const std::vector<std::vector<double>>& matrix,
                   const std::filesystem::path& path);

}  // namespace tokscope
