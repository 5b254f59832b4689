#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokscope/corpus.hpp"
#include "tokscope/vocab.hpp"

namespace tokscope {

/// One learned merge. result == left + right; priorities are contiguous
/// from 0 in the order the merges were learned.
struct MergeRule {
  std::string left;
  std::string right;
  std::string result;
  int priority = 0;
};

struct BpeTrainConfig {
  int vocab_size = 120'000;
  int alphabet_limit = 1'000;
  std::uint64_t min_frequency = 2;
};

/// Trained byte-pair-encoding model: specials at the lowest ids, then the
/// alphabet (by descending corpus frequency), then one unit per merge in
/// merge order. The boundary symbol "▁" is always a standalone token; merge
/// rules never contain it.
class BpeModel {
 public:
  BpeModel(std::vector<std::string> specials, std::vector<std::string> alphabet,
           std::vector<MergeRule> merges);

  const std::vector<std::string>& specials() const { return specials_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  const std::vector<MergeRule>& merges() const { return merges_; }

  int vocab_size() const { return static_cast<int>(units_.size()); }
  const std::string& unit(int id) const { return units_[static_cast<std::size_t>(id)]; }
  bool is_special(int id) const { return id < static_cast<int>(specials_.size()); }
  int unk_id() const { return unk_id_; }

  /// Id of a unit string, or -1 when absent.
  int find(std::string_view unit) const;

  /// Merge priority for the pair of unit ids, or -1 when the pair is not a
  /// learned merge.
  int merge_priority(int left_id, int right_id) const;

 private:
  std::vector<std::string> specials_;
  std::vector<std::string> alphabet_;
  std::vector<MergeRule> merges_;
  std::vector<std::string> units_;
  std::unordered_map<std::string, int, StringViewHash, std::equal_to<>> unit_to_id_;
  std::unordered_map<std::uint64_t, int> pair_rank_;
  int unk_id_ = 0;
};

/// Learns merges greedily on word-frequency pair counts until vocab_size is
/// reached or no pair has frequency ≥ min_frequency. Ties at equal frequency
/// go to the lexicographically smaller (left, right) pair. Deterministic.
BpeModel train_bpe(const std::vector<LanguageCorpus>& corpora, const BpeTrainConfig& config);

/// Splits normalized text to characters, applies merges exhaustively in
/// priority order, and emits unit ids; out-of-alphabet characters emit the
/// UNK id and block merges across them.
std::vector<int> encode_bpe(const BpeModel& model, std::string_view normalized_text);

/// Concatenation of the non-special unit strings of the id sequence.
std::string decode_bpe(const BpeModel& model, const std::vector<int>& ids);

}  // namespace tokscope
