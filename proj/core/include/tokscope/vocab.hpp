#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokscope {

/// Special tokens shared by every model type, occupying the lowest ids in
/// this order.
const std::vector<std::string>& default_specials();

inline constexpr int kUnkSpecialIndex = 3;  // "<unk>" within default_specials()

struct VocabEntry {
  std::string unit;
  double log_prob = 0.0;  // 0.0 for specials (excluded from normalization)
  int id = 0;
};

/// Transparent hash so indexes can be probed with string_view, no allocation.
struct StringViewHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view sv) const {
    return std::hash<std::string_view>{}(sv);
  }
};

/// Ordered set of (unit, log_prob, id): specials first, then scored units.
/// Ids are dense from 0 and equal the entry index. Unit strings are unique.
class ScoredVocabulary {
 public:
  ScoredVocabulary() = default;

  /// Builds specials (log_prob 0) followed by the scored units, assigning
  /// dense ids in the given order. Throws Error on duplicate unit strings.
  ScoredVocabulary(std::vector<std::string> specials,
                   std::vector<std::pair<std::string, double>> scored_units);

  int size() const { return static_cast<int>(entries_.size()); }
  int num_specials() const { return num_specials_; }
  bool is_special(int id) const { return id >= 0 && id < num_specials_; }
  const VocabEntry& entry(int id) const { return entries_[static_cast<std::size_t>(id)]; }
  const std::vector<VocabEntry>& entries() const { return entries_; }

  /// Id of the unit, or nullopt when absent.
  std::optional<int> find(std::string_view unit) const;

  /// Longest unit length in Unicode scalars (0 for an empty vocabulary).
  int max_unit_scalars() const { return max_unit_scalars_; }

  /// Σ exp(log_prob) over non-special entries.
  double probability_mass() const;

  std::vector<std::string> specials() const;

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, int, StringViewHash, std::equal_to<>> index_;
  int num_specials_ = 0;
  int max_unit_scalars_ = 0;
};

}  // namespace tokscope
