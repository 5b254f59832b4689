// Test-only reference implementations. Everything here recomputes results
// from first principles (full recounts, exhaustive enumeration) and stays
// independent of the library code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tokscope/corpus.hpp"
#include "tokscope/unicode.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// BPE: from-scratch trainer that recounts all adjacent pairs every iteration.

struct BpeReference {
  std::vector<std::string> alphabet;
  std::vector<std::pair<std::string, std::string>> merges;
};

inline BpeReference train_bpe_reference(const std::vector<tokscope::LanguageCorpus>& corpora,
                                        int vocab_size, int alphabet_limit,
                                        std::uint64_t min_frequency,
                                        const std::vector<std::string>& specials) {
  namespace uni = tokscope::unicode;

  // Character frequencies -> alphabet.
  std::map<std::string, std::uint64_t> char_counts;
  for (const auto& corpus : corpora) {
    for (const std::string& doc : corpus.documents()) {
      const auto bounds = uni::scalar_boundaries(doc);
      for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        char_counts[doc.substr(bounds[i], bounds[i + 1] - bounds[i])] += 1;
      }
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> by_freq(char_counts.begin(),
                                                             char_counts.end());
  std::stable_sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (alphabet_limit > 0 && by_freq.size() > static_cast<std::size_t>(alphabet_limit)) {
    by_freq.resize(static_cast<std::size_t>(alphabet_limit));
  }

  BpeReference ref;
  std::set<std::string> units(specials.begin(), specials.end());
  for (const auto& [ch, freq] : by_freq) {
    ref.alphabet.push_back(ch);
    units.insert(ch);
  }
  const std::set<std::string> alphabet_set(ref.alphabet.begin(), ref.alphabet.end());

  // Word states: content words (boundary symbol stripped) as unit strings;
  // an empty string marks an out-of-alphabet character.
  std::map<std::string, std::uint64_t> word_freqs;
  for (const auto& corpus : corpora) {
    for (const std::string& doc : corpus.documents()) {
      for (std::string_view word : tokscope::boundary_words(doc)) {
        if (word.substr(0, uni::kBoundary.size()) == uni::kBoundary) {
          word.remove_prefix(uni::kBoundary.size());
        }
        if (!word.empty()) ++word_freqs[std::string(word)];
      }
    }
  }
  std::vector<std::vector<std::string>> words;
  std::vector<std::uint64_t> freqs;
  for (const auto& [word, freq] : word_freqs) {
    std::vector<std::string> syms;
    const auto bounds = uni::scalar_boundaries(word);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      std::string ch = word.substr(bounds[i], bounds[i + 1] - bounds[i]);
      syms.push_back(alphabet_set.count(ch) ? ch : std::string());
    }
    words.push_back(std::move(syms));
    freqs.push_back(freq);
  }

  const int max_merges =
      vocab_size - static_cast<int>(specials.size()) - static_cast<int>(ref.alphabet.size());
  while (static_cast<int>(ref.merges.size()) < max_merges) {
    // Full recount.
    std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
    for (std::size_t w = 0; w < words.size(); ++w) {
      for (std::size_t i = 0; i + 1 < words[w].size(); ++i) {
        if (words[w][i].empty() || words[w][i + 1].empty()) continue;
        counts[{words[w][i], words[w][i + 1]}] += freqs[w];
      }
    }
    // Best eligible pair: max count, then lexicographically smallest.
    const std::pair<std::string, std::string>* best = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count < min_frequency) continue;
      if (units.count(pair.first + pair.second)) continue;
      if (best == nullptr || count > best_count ||
          (count == best_count && pair < *best)) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr) break;

    const std::string merged = best->first + best->second;
    units.insert(merged);
    ref.merges.push_back(*best);
    for (auto& word : words) {
      std::vector<std::string> out;
      std::size_t i = 0;
      while (i < word.size()) {
        if (i + 1 < word.size() && word[i] == best->first && word[i + 1] == best->second) {
          out.push_back(merged);
          i += 2;
        } else {
          out.push_back(word[i]);
          ++i;
        }
      }
      word = std::move(out);
    }
  }
  return ref;
}

// ---------------------------------------------------------------------------
// Unigram: exhaustive segmentation enumeration (2^(n-1) splits).

struct Segmentation {
  std::vector<std::string> pieces;
  double log_score = 0.0;
};

// All segmentations of `text` into known units; unknown single characters are
// allowed only when `unk_log_prob` is supplied (encode-style lattices).
inline void enumerate_segmentations(std::string_view text,
                                    const std::map<std::string, double, std::less<>>& log_probs,
                                    const double* unk_log_prob,
                                    std::vector<std::string>& prefix, double score,
                                    std::vector<Segmentation>& out) {
  namespace uni = tokscope::unicode;
  if (text.empty()) {
    out.push_back({prefix, score});
    return;
  }
  const auto bounds = uni::scalar_boundaries(text);
  for (std::size_t end = 1; end + 1 <= bounds.size(); ++end) {
    const std::string_view piece = text.substr(0, bounds[end]);
    const auto it = log_probs.find(piece);
    double piece_score;
    if (it != log_probs.end()) {
      piece_score = it->second;
    } else if (end == 1 && unk_log_prob != nullptr) {
      piece_score = *unk_log_prob;
    } else {
      continue;
    }
    prefix.emplace_back(piece);
    enumerate_segmentations(text.substr(bounds[end]), log_probs, unk_log_prob, prefix,
                            score + piece_score, out);
    prefix.pop_back();
  }
}

inline std::vector<Segmentation> all_segmentations(
    std::string_view text, const std::map<std::string, double, std::less<>>& log_probs,
    const double* unk_log_prob = nullptr) {
  std::vector<Segmentation> out;
  std::vector<std::string> prefix;
  enumerate_segmentations(text, log_probs, unk_log_prob, prefix, 0.0, out);
  return out;
}

inline double best_segmentation_score(
    std::string_view text, const std::map<std::string, double, std::less<>>& log_probs,
    const double* unk_log_prob = nullptr) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& seg : all_segmentations(text, log_probs, unk_log_prob)) {
    best = std::max(best, seg.log_score);
  }
  return best;
}

// Expected unit counts and log-likelihood of one word by enumeration.
struct EnumeratedEStep {
  std::map<std::string, double> expected_counts;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

inline EnumeratedEStep e_step_by_enumeration(
    std::string_view word, const std::map<std::string, double, std::less<>>& log_probs) {
  EnumeratedEStep result;
  const auto segs = all_segmentations(word, log_probs);
  if (segs.empty()) return result;
  double z = 0.0;
  for (const auto& seg : segs) z += std::exp(seg.log_score);
  result.log_likelihood = std::log(z);
  for (const auto& seg : segs) {
    const double weight = std::exp(seg.log_score) / z;
    for (const auto& piece : seg.pieces) {
      result.expected_counts[piece] += weight;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Metrics: naive tallies over raw token sequences.

struct NaiveMetrics {
  double average_rank = 0.0;
  double chars_per_token = 0.0;
  std::map<std::string, double> probs_by_unit;
};

inline NaiveMetrics tally_metrics(const std::vector<std::vector<std::string>>& token_docs,
                                  std::uint64_t total_chars) {
  NaiveMetrics m;
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& doc : token_docs) {
    for (const auto& unit : doc) {
      ++counts[unit];
      ++total;
    }
  }
  for (const auto& [unit, count] : counts) {
    m.probs_by_unit[unit] = static_cast<double>(count) / static_cast<double>(total);
  }
  std::vector<std::pair<std::string, double>> ranked(m.probs_by_unit.begin(),
                                                     m.probs_by_unit.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    m.average_rank += static_cast<double>(k + 1) * ranked[k].second;
  }
  m.chars_per_token = static_cast<double>(total_chars) / static_cast<double>(total);
  return m;
}

inline double jsd_by_unit(const std::map<std::string, double>& p,
                          const std::map<std::string, double>& q) {
  std::set<std::string> support;
  for (const auto& [unit, prob] : p) support.insert(unit);
  for (const auto& [unit, prob] : q) support.insert(unit);
  double total = 0.0;
  for (const auto& unit : support) {
    const double pp = p.count(unit) ? p.at(unit) : 0.0;
    const double qq = q.count(unit) ? q.at(unit) : 0.0;
    const double m = 0.5 * (pp + qq);
    if (pp > 0.0) total += 0.5 * pp * std::log2(pp / m);
    if (qq > 0.0) total += 0.5 * qq * std::log2(qq / m);
  }
  return total;
}

inline double naive_mrr(const std::vector<std::uint64_t>& ranks) {
  double sum = 0.0;
  for (auto r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

}  // namespace oracles
