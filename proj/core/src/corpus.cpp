#include "tokscope/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "tokscope/error.hpp"
#include "tokscope/rng.hpp"
#include "tokscope/unicode.hpp"

namespace tokscope {

LanguageCorpus::LanguageCorpus(LanguageTag language, std::vector<std::string> normalized_documents)
    : language_(std::move(language)), documents_(std::move(normalized_documents)) {
  if (language_.code.empty()) {
    throw Error("language tag must be non-empty");
  }
  for (const std::string& doc : documents_) {
    if (doc.find(' ') != std::string::npos) {
      throw Error("corpus document contains a raw space; normalize() it first");
    }
    char_count_ += unicode::scalar_count(doc);
  }
}

std::string normalize(std::string_view text) {
  const std::string folded = unicode::nfkc(text);

  // Strip outer whitespace, collapse inner runs to a single boundary symbol.
  std::string collapsed;
  collapsed.reserve(folded.size() + unicode::kBoundary.size());
  bool pending_boundary = false;
  bool seen_content = false;
  std::size_t pos = 0;
  while (pos < folded.size()) {
    const std::size_t start = pos;
    const char32_t scalar = unicode::decode_scalar(folded, pos);
    if (unicode::is_whitespace(scalar)) {
      pending_boundary = seen_content;
      continue;
    }
    if (pending_boundary) {
      collapsed.append(unicode::kBoundary);
      pending_boundary = false;
    }
    seen_content = true;
    collapsed.append(folded, start, pos - start);
  }

  if (collapsed.empty()) return collapsed;
  if (collapsed.compare(0, unicode::kBoundary.size(), unicode::kBoundary) == 0) {
    return collapsed;
  }
  return std::string(unicode::kBoundary) + collapsed;
}

LanguageCorpus ingest(const std::filesystem::path& path, LanguageTag language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open corpus file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();

  if (auto bad = unicode::find_invalid_utf8(raw)) {
    throw Error("invalid UTF-8 in " + path.string() + " at byte offset " +
                std::to_string(*bad));
  }

  std::vector<std::string> documents;
  std::size_t line_start = 0;
  while (line_start <= raw.size()) {
    std::size_t line_end = raw.find('\n', line_start);
    if (line_end == std::string::npos) {
      if (line_start == raw.size()) break;  // no trailing newline handled below
      line_end = raw.size();
    }
    std::string_view line(raw.data() + line_start, line_end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::string doc = normalize(line);
    if (!doc.empty()) documents.push_back(std::move(doc));
    if (line_end == raw.size()) break;
    line_start = line_end + 1;
  }

  return LanguageCorpus(std::move(language), std::move(documents));
}

std::uint64_t balanced_sample_size(std::uint64_t total_chars, const SamplingConfig& config) {
  if (config.c_min == 0) {
    throw Error("c_min must be positive");
  }
  if (config.alpha < 0.0 || config.alpha > 1.0) {
    throw Error("alpha must lie in [0, 1]");
  }
  if (total_chars < config.c_min) {
    throw Error("insufficient data: total_chars " + std::to_string(total_chars) +
                " < c_min " + std::to_string(config.c_min));
  }
  const double c_min = static_cast<double>(config.c_min);
  const double ratio = static_cast<double>(total_chars) / c_min;
  const double value = c_min * std::pow(ratio, config.alpha);
  // Round half up, then clamp against floating-point spill at the endpoints.
  auto rounded = static_cast<std::uint64_t>(std::floor(value + 0.5));
  rounded = std::max(rounded, config.c_min);
  rounded = std::min(rounded, total_chars);
  return rounded;
}

LanguageCorpus subsample(const LanguageCorpus& corpus, std::uint64_t target_chars,
                         std::uint64_t seed) {
  if (target_chars >= corpus.char_count()) {
    return corpus;
  }
  std::vector<std::size_t> order(corpus.documents().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  deterministic_shuffle(order, rng);

  std::vector<std::string> picked;
  std::uint64_t cumulative = 0;
  for (std::size_t idx : order) {
    if (cumulative >= target_chars) break;
    picked.push_back(corpus.documents()[idx]);
    cumulative += unicode::scalar_count(picked.back());
  }
  return LanguageCorpus(corpus.language(), std::move(picked));
}

namespace {

std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

}  // namespace

void save_corpus(const LanguageCorpus& corpus, const std::filesystem::path& text_path) {
  {
    std::ofstream out(text_path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file: " + text_path.string());
    for (const std::string& doc : corpus.documents()) {
      out << doc << '\n';
    }
  }
  std::filesystem::path meta_path = text_path;
  meta_path += ".meta.json";
  std::ofstream meta(meta_path, std::ios::binary);
  if (!meta) throw Error("cannot write corpus sidecar: " + meta_path.string());
  meta << "{\"language\":\"" << json_escape(corpus.language().code) << "\","
       << "\"char_count\":" << corpus.char_count() << ","
       << "\"document_count\":" << corpus.documents().size() << ","
       << "\"normalization_version\":\"" << kNormalizationVersion << "\"}\n";
}

std::vector<std::string_view> boundary_words(std::string_view document) {
  std::vector<std::string_view> words;
  if (document.empty()) return words;
  const std::string_view boundary = unicode::kBoundary;
  std::size_t word_start = 0;
  std::size_t search_from =
      document.compare(0, boundary.size(), boundary) == 0 ? boundary.size() : 0;
  while (true) {
    const std::size_t next = document.find(boundary, search_from);
    if (next == std::string_view::npos) break;
    words.push_back(document.substr(word_start, next - word_start));
    word_start = next;
    search_from = next + boundary.size();
  }
  words.push_back(document.substr(word_start));
  return words;
}

std::vector<std::pair<std::string, std::uint64_t>> word_frequencies(
    const std::vector<LanguageCorpus>& corpora) {
  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (const LanguageCorpus& corpus : corpora) {
    for (const std::string& doc : corpus.documents()) {
      for (std::string_view word : boundary_words(doc)) {
        auto it = counts.find(word);
        if (it == counts.end()) {
          counts.emplace(std::string(word), 1);
        } else {
          ++it->second;
        }
      }
    }
  }
  return {counts.begin(), counts.end()};
}

}  // namespace tokscope
