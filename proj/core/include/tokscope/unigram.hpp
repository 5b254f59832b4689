#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokscope/corpus.hpp"
#include "tokscope/vocab.hpp"

namespace tokscope {

struct UnigramTrainConfig {
  int target_vocab_size = 120'000;
  int max_piece_length = 16;       // in Unicode scalars
  double shrinking_factor = 0.75;
  int seed_vocab_size = 0;         // 0 → min(1e6, 10 * target_vocab_size)
  int em_iterations_per_round = 2;
};

/// Unigram LM tokenizer: a ScoredVocabulary whose non-special entries carry
/// log probabilities summing to 1, segmented with Viterbi decoding.
class UnigramModel {
 public:
  explicit UnigramModel(ScoredVocabulary vocab);

  const ScoredVocabulary& vocab() const { return vocab_; }
  int unk_id() const { return kUnkSpecialIndex; }

  /// UNK penalty: (minimum unit log_prob) - 10.
  double unk_log_prob() const { return unk_log_prob_; }

 private:
  ScoredVocabulary vocab_;
  double unk_log_prob_ = -10.0;
};

/// Collects all word-internal substrings of at most max_piece_length scalars
/// and keeps every single character plus the highest count·length multi-char
/// substrings up to a total of seed_vocab_size entries (specials excluded
/// from the budget). Initial log_probs are count-proportional.
ScoredVocabulary seed_vocabulary(const std::vector<LanguageCorpus>& corpora,
                                 int max_piece_length, int seed_vocab_size);

/// One EM iteration: expected unit counts by forward-backward over every
/// sentence lattice, then probabilities renormalized from the counts.
/// Returns the updated vocabulary and the corpus log-likelihood computed
/// with the incoming probabilities.
std::pair<ScoredVocabulary, double> em_step(const ScoredVocabulary& vocab,
                                            const std::vector<LanguageCorpus>& corpora);

/// Removes the multi-character units with the lowest likelihood contribution
/// (expected count × -log_prob), keeping a shrinking_factor fraction of them
/// plus all single characters and specials, then renormalizes. min_multi_keep
/// bounds the survivors from below (used by train_unigram so rounds never
/// undershoot the target).
ScoredVocabulary prune(const ScoredVocabulary& vocab,
                       const std::vector<LanguageCorpus>& corpora, double shrinking_factor,
                       std::size_t min_multi_keep = 0);

/// Seed → repeat [em_iterations_per_round × em_step; prune] until the target
/// size is reached, then trim to exactly target_vocab_size by lowest
/// contribution. Deterministic. Throws Error when the target is smaller than
/// characters + specials.
UnigramModel train_unigram(const std::vector<LanguageCorpus>& corpora,
                           const UnigramTrainConfig& config);

/// Maximum-log-probability segmentation (Viterbi over the lattice). Unknown
/// characters emit UNK at the model's penalty score. Ties break toward fewer
/// tokens, then the lexicographically smallest unit at the first divergence.
std::vector<int> encode_viterbi(const UnigramModel& model, std::string_view normalized_text);

/// Viterbi over a bare vocabulary (UNK id = kUnkSpecialIndex); the core of
/// encode_viterbi, shared with per-segment NoOverlap encoding.
std::vector<int> viterbi_segment(const ScoredVocabulary& vocab, double unk_log_prob,
                                 std::string_view normalized_text);

/// Concatenation of the non-special unit strings of the id sequence.
std::string decode_unigram(const UnigramModel& model, const std::vector<int>& ids);

}  // namespace tokscope
