#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tokscope/corpus.hpp"
#include "tokscope/model.hpp"

namespace tokscope {

/// Empirical probability distribution of vocabulary units over one language's
/// corpus. Entries are sparse (only emitted units), ascending by id, with
/// probabilities summing to exactly 1.0 in entry order.
class TokenDistribution {
 public:
  struct Entry {
    int id = 0;
    std::string unit;
    std::uint64_t count = 0;
    double prob = 0.0;
  };

  TokenDistribution(LanguageTag language, std::size_t vocab_size, std::vector<Entry> entries,
                    std::uint64_t total_tokens, std::uint64_t total_chars,
                    std::string model_hash);

  const LanguageTag& language() const { return language_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::uint64_t total_tokens() const { return total_tokens_; }
  std::uint64_t total_chars() const { return total_chars_; }
  const std::string& model_hash() const { return model_hash_; }

 private:
  LanguageTag language_;
  std::size_t vocab_size_ = 0;
  std::vector<Entry> entries_;
  std::uint64_t total_tokens_ = 0;
  std::uint64_t total_chars_ = 0;
  std::string model_hash_;
};

/// Tokenizes the corpus and normalizes occurrence counts. Throws Error on an
/// empty corpus (zero tokens).
TokenDistribution empirical_distribution(const TokenizerModel& model,
                                         const LanguageCorpus& corpus);

/// Probability-weighted mean rank: units sorted by descending probability
/// (ties: lexicographic by unit string), rank of the k-th unit = k.
double average_rank(const TokenDistribution& dist);

/// Number of units whose probability is shared with at least one other unit
/// (reported alongside AR because tie order is a convention).
std::size_t rank_tie_count(const TokenDistribution& dist);

/// total_chars / total_tokens.
double chars_per_token(const TokenDistribution& dist);

/// Jensen-Shannon divergence with base-2 logarithms; symmetric, in [0, 1],
/// exactly 0 for identical distributions and exactly 1 for disjoint supports.
/// Throws Error when the distributions come from different models.
double jsd(const TokenDistribution& d1, const TokenDistribution& d2);

/// Mean reciprocal rank of externally supplied gold ranks (each ≥ 1).
double mrr(const std::vector<std::uint64_t>& ranks);

/// Reads rank records, one integer per line.
std::vector<std::uint64_t> load_rank_records(const std::filesystem::path& path);

struct FrequencyDiff {
  struct Item {
    std::string unit;
    double prob_a = 0.0;
    double prob_b = 0.0;
    double diff = 0.0;  // prob_a - prob_b for a_over_b; the reverse below
  };
  std::vector<Item> a_over_b;  // units most overrepresented in A
  std::vector<Item> b_over_a;
};

/// Units with the highest probability difference between two distributions
/// measured on the same corpus with different models (compared by string).
/// With exclude_punct set, specials and units without any letter or digit
/// are skipped.
FrequencyDiff vocab_frequency_diff(const TokenDistribution& a, const TokenDistribution& b,
                                   std::size_t top_k, bool exclude_punct = false);

/// (1-based rank, log2 probability) with probabilities sorted descending.
std::vector<std::pair<std::size_t, double>> sorted_logprob_curve(const TokenDistribution& dist);

/// TSV serialization: a '#'-prefixed JSON header line (language, model_hash,
/// total_chars, total_tokens, vocab_size), then unit_id / unit / count /
/// probability rows. Probabilities carry 17 significant digits.
void save_distribution(const TokenDistribution& dist, const std::filesystem::path& path);
TokenDistribution load_distribution(const std::filesystem::path& path);

}  // namespace tokscope
