#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tokscope {

/// Short language identifier (e.g. ISO 639-1 code). Non-empty.
struct LanguageTag {
  std::string code;

  auto operator<=>(const LanguageTag&) const = default;
};

/// Language-tagged normalized text. Immutable after construction; documents
/// contain the "▁" boundary symbol instead of raw spaces, and char_count is
/// the total number of Unicode scalars across documents (meta-symbols
/// included).
class LanguageCorpus {
 public:
  LanguageCorpus(LanguageTag language, std::vector<std::string> normalized_documents);

  const LanguageTag& language() const { return language_; }
  const std::vector<std::string>& documents() const { return documents_; }
  std::uint64_t char_count() const { return char_count_; }

 private:
  LanguageTag language_;
  std::vector<std::string> documents_;
  std::uint64_t char_count_ = 0;
};

/// Parameters of the balanced subsampling rule
/// c = c_min * (total / c_min)^alpha.
struct SamplingConfig {
  std::uint64_t c_min = 10'000'000;
  double alpha = 0.25;
  std::uint64_t seed = 0;
};

/// Normalizes one document: NFKC, then leading/trailing whitespace stripped,
/// every internal whitespace run replaced by a single "▁", and a leading "▁"
/// prepended when not already present. Idempotent; "" maps to "".
std::string normalize(std::string_view text);

/// Reads a UTF-8 text file (one document per line), normalizing every line.
/// Throws Error on a missing file or invalid UTF-8 (with the byte offset).
LanguageCorpus ingest(const std::filesystem::path& path, LanguageTag language);

/// Eq. c = round(c_min * (total_chars / c_min)^alpha), clamped to
/// [c_min, total_chars]. Throws Error when total_chars < c_min.
std::uint64_t balanced_sample_size(std::uint64_t total_chars, const SamplingConfig& config);

/// Seeded uniform document selection: shuffled documents are taken until the
/// cumulative character count first reaches target_chars. Returns the corpus
/// unchanged when it is not larger than the target.
LanguageCorpus subsample(const LanguageCorpus& corpus, std::uint64_t target_chars,
                         std::uint64_t seed);

/// Format version recorded in corpus sidecar files.
inline constexpr std::string_view kNormalizationVersion = "nfkc-ws-1";

/// Writes the normalized corpus as plain text (one document per line) plus a
/// JSON sidecar {language, char_count, document_count, normalization_version}
/// at text_path + ".meta.json".
void save_corpus(const LanguageCorpus& corpus, const std::filesystem::path& text_path);

// Word segmentation helpers shared by the trainers.

/// Splits a normalized document into boundary-prefixed words: every "▁"
/// starts a new word ("▁ab▁cd" → ["▁ab", "▁cd"]); a leading run without the
/// boundary symbol forms its own word.
std::vector<std::string_view> boundary_words(std::string_view document);

/// Unique boundary words across all documents of all corpora with their
/// total occurrence counts, sorted lexicographically (deterministic order
/// for every downstream accumulation).
std::vector<std::pair<std::string, std::uint64_t>> word_frequencies(
    const std::vector<LanguageCorpus>& corpora);

}  // namespace tokscope
