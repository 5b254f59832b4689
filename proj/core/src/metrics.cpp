#include "tokscope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tokscope/error.hpp"
#include "tokscope/model_io.hpp"
#include "tokscope/unicode.hpp"
#include "tokscope/vocab.hpp"

namespace tokscope {

TokenDistribution::TokenDistribution(LanguageTag language, std::size_t vocab_size,
                                     std::vector<Entry> entries, std::uint64_t total_tokens,
                                     std::uint64_t total_chars, std::string model_hash)
    : language_(std::move(language)),
      vocab_size_(vocab_size),
      entries_(std::move(entries)),
      total_tokens_(total_tokens),
      total_chars_(total_chars),
      model_hash_(std::move(model_hash)) {
  int last_id = -1;
  for (const Entry& e : entries_) {
    if (e.id <= last_id) {
      throw Error("distribution entries must be strictly ascending by id");
    }
    if (e.id >= static_cast<int>(vocab_size_)) {
      throw Error("distribution entry id exceeds the vocabulary size");
    }
    if (e.prob <= 0.0) {
      throw Error("distribution probabilities must be positive");
    }
    last_id = e.id;
  }
}

namespace {

// Probabilities count/total with the last entry set to 1 - (sum of the
// others), which makes the ascending-order floating-point sum exactly 1.0.
// The correction is a few ulps at most.
std::vector<TokenDistribution::Entry> normalized_entries(
    const std::map<int, std::uint64_t>& counts, std::uint64_t total,
    const TokenizerModel& model) {
  std::vector<TokenDistribution::Entry> entries;
  entries.reserve(counts.size());
  for (const auto& [id, count] : counts) {
    entries.push_back({id, model.unit(id), count,
                       static_cast<double>(count) / static_cast<double>(total)});
  }
  if (!entries.empty()) {
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) partial += entries[i].prob;
    entries.back().prob = 1.0 - partial;
    if (entries.back().prob <= 0.0) {
      throw Error("degenerate distribution: trailing probability vanished");
    }
  }
  return entries;
}

}  // namespace

TokenDistribution empirical_distribution(const TokenizerModel& model,
                                         const LanguageCorpus& corpus) {
  CachedEncoder encoder(model, &corpus.language());
  std::map<int, std::uint64_t> counts;
  std::uint64_t total = 0;
  std::vector<int> ids;
  for (const std::string& doc : corpus.documents()) {
    ids.clear();
    encoder.encode_document(doc, ids);
    for (int id : ids) {
      ++counts[id];
    }
    total += ids.size();
  }
  if (total == 0) {
    throw Error("cannot build a distribution from an empty corpus");
  }
  return TokenDistribution(corpus.language(), static_cast<std::size_t>(model.vocab_size()),
                           normalized_entries(counts, total, model), total,
                           corpus.char_count(), model_hash(model));
}

namespace {

// Rank order shared by average_rank and the curve export: descending
// probability, ties by unit string.
std::vector<const TokenDistribution::Entry*> rank_order(const TokenDistribution& dist) {
  std::vector<const TokenDistribution::Entry*> order;
  order.reserve(dist.entries().size());
  for (const auto& e : dist.entries()) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->prob != b->prob) return a->prob > b->prob;
    return a->unit < b->unit;
  });
  return order;
}

}  // namespace

double average_rank(const TokenDistribution& dist) {
  if (dist.entries().empty()) {
    throw Error("average rank of an empty distribution is undefined");
  }
  const auto order = rank_order(dist);
  double ar = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    ar += static_cast<double>(k + 1) * order[k]->prob;
  }
  return ar;
}

std::size_t rank_tie_count(const TokenDistribution& dist) {
  const auto order = rank_order(dist);
  std::size_t tied = 0;
  std::size_t run = 1;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (k < order.size() && order[k]->prob == order[k - 1]->prob) {
      ++run;
      continue;
    }
    if (run > 1) tied += run;
    run = 1;
  }
  return tied;
}

double chars_per_token(const TokenDistribution& dist) {
  if (dist.total_tokens() == 0) {
    throw Error("chars-per-token of an empty tokenization is undefined");
  }
  return static_cast<double>(dist.total_chars()) / static_cast<double>(dist.total_tokens());
}

double jsd(const TokenDistribution& d1, const TokenDistribution& d2) {
  if (d1.model_hash() != d2.model_hash()) {
    throw Error("JSD requires distributions over the same model (hash mismatch)");
  }
  const auto& a = d1.entries();
  const auto& b = d2.entries();
  double acc1 = 0.0;
  double acc2 = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    const int ida = i < a.size() ? a[i].id : INT32_MAX;
    const int idb = j < b.size() ? b[j].id : INT32_MAX;
    double p = 0.0;
    double q = 0.0;
    if (ida <= idb) p = a[i++].prob;
    if (idb <= ida) q = b[j++].prob;
    const double m = 0.5 * (p + q);
    if (p > 0.0) acc1 += p * std::log2(p / m);
    if (q > 0.0) acc2 += q * std::log2(q / m);
  }
  return 0.5 * acc1 + 0.5 * acc2;
}

double mrr(const std::vector<std::uint64_t>& ranks) {
  if (ranks.empty()) {
    throw Error("MRR of an empty rank list is undefined");
  }
  double sum = 0.0;
  for (std::uint64_t rank : ranks) {
    if (rank == 0) {
      throw Error("ranks must be >= 1");
    }
    sum += 1.0 / static_cast<double>(rank);
  }
  return sum / static_cast<double>(ranks.size());
}

std::vector<std::uint64_t> load_rank_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open rank records: " + path.string());
  }
  std::vector<std::uint64_t> ranks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const long long value = std::stoll(line, &used);
      if (used != line.size() || value < 1) throw std::invalid_argument("range");
      ranks.push_back(static_cast<std::uint64_t>(value));
    } catch (const std::exception&) {
      throw Error("invalid rank at " + path.string() + ":" + std::to_string(line_no) +
                  ": " + line);
    }
  }
  return ranks;
}

namespace {

bool has_word_character(std::string_view unit) {
  std::size_t pos = 0;
  while (pos < unit.size()) {
    const char32_t c = unicode::decode_scalar(unit, pos);
    if (c < 0x80) {
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
        return true;
      }
      continue;
    }
    if (c < 0xC0) continue;                    // Latin-1 punctuation/symbols
    if (c >= 0x2000 && c <= 0x206F) continue;  // general punctuation
    if (c >= 0x2190 && c <= 0x2BFF) continue;  // arrows, math, box drawing, ▁
    if (c >= 0x3000 && c <= 0x303F) continue;  // CJK punctuation
    if (c >= 0xFE30 && c <= 0xFE4F) continue;
    if (c >= 0xFF01 && c <= 0xFF0F) continue;
    if (c >= 0xFF1A && c <= 0xFF20) continue;
    if (c >= 0xFF3B && c <= 0xFF40) continue;
    if (c >= 0xFF5B && c <= 0xFF65) continue;
    return true;
  }
  return false;
}

bool punct_or_special(std::string_view unit) {
  const auto& specials = default_specials();
  if (std::find(specials.begin(), specials.end(), unit) != specials.end()) return true;
  return !has_word_character(unit);
}

}  // namespace

FrequencyDiff vocab_frequency_diff(const TokenDistribution& a, const TokenDistribution& b,
                                   std::size_t top_k, bool exclude_punct) {
  std::map<std::string_view, std::pair<double, double>> by_unit;
  for (const auto& e : a.entries()) by_unit[e.unit].first = e.prob;
  for (const auto& e : b.entries()) by_unit[e.unit].second = e.prob;

  std::vector<FrequencyDiff::Item> items;
  items.reserve(by_unit.size());
  for (const auto& [unit, probs] : by_unit) {
    if (exclude_punct && punct_or_special(unit)) continue;
    items.push_back({std::string(unit), probs.first, probs.second,
                     probs.first - probs.second});
  }

  FrequencyDiff out;
  auto take = [&](bool a_side) {
    std::vector<FrequencyDiff::Item> side = items;
    std::sort(side.begin(), side.end(), [&](const auto& x, const auto& y) {
      const double dx = a_side ? x.diff : -x.diff;
      const double dy = a_side ? y.diff : -y.diff;
      if (dx != dy) return dx > dy;
      return x.unit < y.unit;
    });
    if (side.size() > top_k) side.resize(top_k);
    if (!a_side) {
      for (auto& item : side) item.diff = -item.diff;
    }
    return side;
  };
  out.a_over_b = take(true);
  out.b_over_a = take(false);
  return out;
}

std::vector<std::pair<std::size_t, double>> sorted_logprob_curve(const TokenDistribution& dist) {
  if (dist.entries().empty()) {
    throw Error("log-probability curve of an empty distribution is undefined");
  }
  const auto order = rank_order(dist);
  std::vector<std::pair<std::size_t, double>> curve;
  curve.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    curve.emplace_back(k + 1, std::log2(order[k]->prob));
  }
  return curve;
}

void save_distribution(const TokenDistribution& dist, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write distribution: " + path.string());
  }
  out << "# {\"language\":\"" << dist.language().code << "\",\"model_hash\":\""
      << dist.model_hash() << "\",\"total_chars\":" << dist.total_chars()
      << ",\"total_tokens\":" << dist.total_tokens()
      << ",\"vocab_size\":" << dist.vocab_size() << "}\n";
  out << "id\tunit\tcount\tprob\n";
  char buf[40];
  for (const auto& e : dist.entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.prob);
    out << e.id << '\t' << e.unit << '\t' << e.count << '\t' << buf << '\n';
  }
}

TokenDistribution load_distribution(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open distribution: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line.size() < 2 || line[0] != '#') {
    throw Error("distribution file missing its header: " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line.substr(1));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad distribution header in " + path.string() + ": " + e.what());
  }

  std::getline(in, line);  // column header
  std::vector<TokenDistribution::Entry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TokenDistribution::Entry entry;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = line.find('\t', t1 + 1);
    std::size_t t3 = line.find('\t', t2 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos || t3 == std::string::npos) {
      throw Error("malformed distribution row: " + line);
    }
    entry.id = std::stoi(line.substr(0, t1));
    entry.unit = line.substr(t1 + 1, t2 - t1 - 1);
    entry.count = std::stoull(line.substr(t2 + 1, t3 - t2 - 1));
    entry.prob = std::stod(line.substr(t3 + 1));
    entries.push_back(std::move(entry));
  }

  return TokenDistribution(LanguageTag{header.at("language").get<std::string>()},
                           header.at("vocab_size").get<std::size_t>(), std::move(entries),
                           header.at("total_tokens").get<std::uint64_t>(),
                           header.at("total_chars").get<std::uint64_t>(),
                           header.at("model_hash").get<std::string>());
}

}  // namespace tokscope
