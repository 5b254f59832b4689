#include "tokscope/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokscope/error.hpp"
#include "tokscope/rng.hpp"

namespace tokscope {

ObservationTable::ObservationTable(std::vector<Row> rows) : rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!index_.emplace(std::make_pair(rows_[i].tokenizer, rows_[i].group_key), i).second) {
      throw Error("duplicate observation row: (" + rows_[i].tokenizer + ", " +
                  rows_[i].group_key + ")");
    }
  }
}

std::vector<std::string> ObservationTable::metric_names() const {
  std::set<std::string> names;
  for (const Row& row : rows_) {
    for (const auto& [name, value] : row.values) names.insert(name);
  }
  return {names.begin(), names.end()};
}

void ObservationTable::add(const std::string& tokenizer, const std::string& group_key,
                           const std::string& metric, double value) {
  const auto key = std::make_pair(tokenizer, group_key);
  auto it = index_.find(key);
  if (it == index_.end()) {
    index_.emplace(key, rows_.size());
    rows_.push_back({tokenizer, group_key, {{metric, value}}});
    return;
  }
  if (!rows_[it->second].values.emplace(metric, value).second) {
    throw Error("duplicate metric " + metric + " for (" + tokenizer + ", " + group_key + ")");
  }
}

ObservationTable ObservationTable::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open scores CSV: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error("empty scores CSV: " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "tokenizer,group_key,metric,value") {
    throw Error("scores CSV must start with header tokenizer,group_key,metric,value");
  }
  ObservationTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = f < 3 ? line.find(',', start) : std::string::npos;
      if (f < 3 && comma == std::string::npos) {
        throw Error("malformed CSV row at " + path.string() + ":" + std::to_string(line_no));
      }
      fields[static_cast<std::size_t>(f)] =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      start = comma + 1;
    }
    try {
      std::size_t used = 0;
      const double value = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing junk");
      table.add(fields[0], fields[1], fields[2], value);
    } catch (const std::exception&) {
      throw Error("invalid value at " + path.string() + ":" + std::to_string(line_no) + ": " +
                  fields[3]);
    }
  }
  return table;
}

ObservationTable center_by_group(const ObservationTable& table, const std::string& metric) {
  std::map<std::string, std::pair<double, std::size_t>> sums;  // group → (sum, n)
  for (const auto& row : table.rows()) {
    const auto it = row.values.find(metric);
    if (it != row.values.end()) {
      auto& [sum, n] = sums[row.group_key];
      sum += it->second;
      ++n;
    }
  }
  if (sums.empty()) {
    throw Error("unknown metric name: " + metric);
  }
  std::vector<ObservationTable::Row> rows = table.rows();
  for (auto& row : rows) {
    const auto it = row.values.find(metric);
    if (it == row.values.end()) continue;
    const auto& [sum, n] = sums.at(row.group_key);
    it->second -= sum / static_cast<double>(n);
  }
  return ObservationTable(std::move(rows));
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  std::vector<double> ranks(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k + 1;
    while (end < n && values[order[end]] == values[order[k]]) ++end;
    const double avg = static_cast<double>(k + end + 1) / 2.0;  // 1-based average
    for (std::size_t i = k; i < end; ++i) ranks[order[i]] = avg;
    k = end;
  }
  return ranks;
}

// Pearson correlation; returns nullopt when either side is constant.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                           std::uint64_t seed, int permutations) {
  if (x.size() != y.size()) {
    throw Error("spearman inputs must have equal length");
  }
  if (x.size() < 3) {
    throw Error("spearman needs at least 3 observations");
  }
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const auto rho = pearson(rx, ry);
  if (!rho) {
    throw Error("spearman is undefined for constant input");
  }

  std::mt19937_64 rng(seed);
  std::vector<double> permuted = ry;
  std::size_t at_least_as_extreme = 0;
  for (int p = 0; p < permutations; ++p) {
    deterministic_shuffle(permuted, rng);
    const auto r = pearson(rx, permuted);
    if (r && std::abs(*r) >= std::abs(*rho)) ++at_least_as_extreme;
  }
  const double p_value = static_cast<double>(1 + at_least_as_extreme) /
                         static_cast<double>(1 + permutations);

  CorrelationResult result;
  result.rho = *rho;
  result.p_value = p_value;
  result.n = x.size();
  return result;
}

namespace {

std::string pair_key(const std::string& a, const std::string& b) {
  return a < b ? a + "-" + b : b + "-" + a;
}

// Joins an internal measure with an external metric on (tokenizer,
// group_key), centers both sides per group, and correlates the pooled
// observations.
std::optional<CorrelationResult> correlate(const ObservationTable& internal,
                                           const std::string& measure,
                                           const ObservationTable& external,
                                           const std::string& metric, std::uint64_t seed) {
  std::map<std::pair<std::string, std::string>, double> internal_values;
  for (const auto& row : internal.rows()) {
    const auto it = row.values.find(measure);
    if (it != row.values.end()) {
      internal_values[{row.tokenizer, row.group_key}] = it->second;
    }
  }

  ObservationTable joined;
  for (const auto& row : external.rows()) {
    const auto metric_it = row.values.find(metric);
    if (metric_it == row.values.end()) continue;
    const auto internal_it = internal_values.find({row.tokenizer, row.group_key});
    if (internal_it == internal_values.end()) continue;
    joined.add(row.tokenizer, row.group_key, measure, internal_it->second);
    joined.add(row.tokenizer, row.group_key, metric, metric_it->second);
  }
  if (joined.rows().size() < 3) return std::nullopt;

  const ObservationTable centered = center_by_group(center_by_group(joined, measure), metric);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : centered.rows()) {
    xs.push_back(row.values.at(measure));
    ys.push_back(row.values.at(metric));
  }
  try {
    CorrelationResult result = spearman(xs, ys, seed);
    result.metric_x = measure;
    result.metric_y = metric;
    return result;
  } catch (const Error&) {
    return std::nullopt;  // centered values degenerate (e.g. one tokenizer per group)
  }
}

}  // namespace

MetricsReport build_report(const std::vector<std::pair<std::string, TokenizerModel>>& models,
                           const std::vector<LanguageCorpus>& corpora,
                           const std::optional<ObservationTable>& external_scores,
                           std::uint64_t seed) {
  std::vector<const LanguageCorpus*> sorted_corpora;
  for (const auto& corpus : corpora) sorted_corpora.push_back(&corpus);
  std::sort(sorted_corpora.begin(), sorted_corpora.end(),
            [](const auto* a, const auto* b) { return a->language() < b->language(); });

  std::vector<std::pair<std::string, const TokenizerModel*>> sorted_models;
  for (const auto& [name, model] : models) sorted_models.emplace_back(name, &model);
  std::sort(sorted_models.begin(), sorted_models.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  MetricsReport report;
  ObservationTable measures;

  for (const auto& [name, model] : sorted_models) {
    std::vector<TokenDistribution> dists;
    dists.reserve(sorted_corpora.size());
    for (const auto* corpus : sorted_corpora) {
      dists.push_back(empirical_distribution(*model, *corpus));
    }

    for (const auto& dist : dists) {
      MetricsReport::Allocation row;
      row.model = name;
      row.language = dist.language().code;
      row.average_rank = average_rank(dist);
      row.ar_tie_count = rank_tie_count(dist);
      row.chars_per_token = chars_per_token(dist);
      row.total_tokens = dist.total_tokens();
      row.total_chars = dist.total_chars();
      report.allocation.push_back(row);
      measures.add(name, row.language, "average_rank", row.average_rank);
      measures.add(name, row.language, "chars_per_token", row.chars_per_token);
    }

    MetricsReport::Overlap overlap;
    overlap.model = name;
    for (const auto& dist : dists) overlap.languages.push_back(dist.language().code);
    overlap.matrix.assign(dists.size(), std::vector<double>(dists.size(), 0.0));
    for (std::size_t i = 0; i < dists.size(); ++i) {
      for (std::size_t j = i + 1; j < dists.size(); ++j) {
        const double d = jsd(dists[i], dists[j]);
        overlap.matrix[i][j] = d;
        overlap.matrix[j][i] = d;
        measures.add(name, pair_key(overlap.languages[i], overlap.languages[j]), "jsd", d);
      }
    }
    report.overlap.push_back(std::move(overlap));
  }

  if (external_scores) {
    report.has_external_scores = true;
    for (const auto& row : external_scores->rows()) {
      const auto it = row.values.find("mrr");
      if (it != row.values.end()) {
        report.mrr.push_back({row.tokenizer, row.group_key, {{"mrr", it->second}}});
      }
    }
    for (const std::string& metric : external_scores->metric_names()) {
      for (const char* measure : {"average_rank", "chars_per_token", "jsd"}) {
        if (auto result = correlate(measures, measure, *external_scores, metric, seed)) {
          report.correlations.push_back(std::move(*result));
        }
      }
    }
  }

  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["allocation"] = nlohmann::ordered_json::array();
  for (const auto& row : report.allocation) {
    doc["allocation"].push_back({{"model", row.model},
                                 {"language", row.language},
                                 {"average_rank", row.average_rank},
                                 {"ar_tie_count", row.ar_tie_count},
                                 {"chars_per_token", row.chars_per_token},
                                 {"total_tokens", row.total_tokens},
                                 {"total_chars", row.total_chars}});
  }
  doc["overlap"] = nlohmann::ordered_json::array();
  for (const auto& overlap : report.overlap) {
    doc["overlap"].push_back(
        {{"model", overlap.model}, {"languages", overlap.languages}, {"matrix", overlap.matrix}});
  }
  if (report.has_external_scores) {
    doc["mrr"] = nlohmann::ordered_json::array();
    for (const auto& row : report.mrr) {
      doc["mrr"].push_back({{"tokenizer", row.tokenizer},
                            {"group_key", row.group_key},
                            {"value", row.values.at("mrr")}});
    }
    doc["correlations"] = nlohmann::ordered_json::array();
    for (const auto& c : report.correlations) {
      doc["correlations"].push_back({{"measure", c.metric_x},
                                     {"metric", c.metric_y},
                                     {"rho", c.rho},
                                     {"p_value", c.p_value},
                                     {"n", c.n}});
    }
  }
  return doc.dump(2) + "\n";
}

void save_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write report: " + path.string());
  }
  out << report_to_json(report);
}

void export_matrix(const std::vector<std::string>& languages,
                   const std::vector<std::vector<double>>& matrix,
                   const std::filesystem::path& path) {
  if (matrix.size() != languages.size()) {
    throw Error("matrix size does not match the language labels");
  }
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix[i].size() != languages.size()) {
      throw Error("matrix must be square");
    }
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      if (std::abs(matrix[i][j] - matrix[j][i]) > 1e-12) {
        throw Error("matrix must be symmetric");
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write matrix: " + path.string());
  }
  for (const std::string& lang : languages) out << '\t' << lang;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << languages[i];
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.4f", matrix[i][j]);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

}  // namespace tokscope
