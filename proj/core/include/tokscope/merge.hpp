#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokscope/corpus.hpp"
#include "tokscope/unigram.hpp"
#include "tokscope/vocab.hpp"

namespace tokscope {

/// Per-language mixing weights for TokMix (Σ w = 1).
struct MixWeights {
  std::map<std::string, double> weights;  // language code → weight

  static MixWeights uniform(const std::vector<LanguageTag>& languages);
};

/// Multilingual tokenizer with disjoint per-language id segments. Specials
/// get ids [0, |specials|); each language's units follow as one contiguous
/// block in language order, so the same string in two languages has two ids.
class NoOverlapModel {
 public:
  struct Segment {
    LanguageTag language;
    int id_offset = 0;                 // global id of the segment's first unit
    ScoredVocabulary vocab;            // specials + units; local ids
    double unk_log_prob = -10.0;
  };

  NoOverlapModel(std::vector<std::string> specials, std::vector<Segment> segments);

  const std::vector<std::string>& specials() const { return specials_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(const LanguageTag& language) const;
  bool has_language(const LanguageTag& language) const;

  int vocab_size() const { return total_size_; }
  int unk_id() const { return kUnkSpecialIndex; }
  bool is_special(int id) const { return id < static_cast<int>(specials_.size()); }

  /// Unit string of a global id (specials included).
  const std::string& unit(int id) const;

  /// Global id range [first, last) of a language's segment.
  std::pair<int, int> id_range(const LanguageTag& language) const;

 private:
  std::vector<std::string> specials_;
  std::vector<Segment> segments_;
  int total_size_ = 0;
};

/// Concatenates monolingual Unigram models into disjoint id segments, in
/// ascending language order. Per-language log_probs are preserved unchanged.
/// Throws Error on mismatched specials, duplicate tags, or < 2 languages.
NoOverlapModel merge_no_overlap(
    const std::vector<std::pair<LanguageTag, UnigramModel>>& models,
    const std::vector<std::string>& specials);

/// Viterbi-encodes with the language's segment only; emitted ids lie in that
/// segment's global range (plus shared specials for UNK).
std::vector<int> encode_no_overlap(const NoOverlapModel& model, std::string_view normalized_text,
                                   const LanguageTag& language);

/// The weighted-average route: p̂(unit) = Σ_i w_i · p_i(unit) over the union
/// of the models' non-special units, with p_i(unit) = 0 when absent.
/// No trimming or renormalization.
std::map<std::string, double> mix_probabilities(
    const std::vector<std::pair<LanguageTag, UnigramModel>>& models, const MixWeights& weights);

/// TokMix: average probabilities, sort descending, keep the top target_size
/// entries (specials and single characters always retained), renormalize.
/// Result is a standard Unigram model.
UnigramModel merge_tokmix(const std::vector<std::pair<LanguageTag, UnigramModel>>& models,
                          const MixWeights& weights, int target_size);

}  // namespace tokscope
