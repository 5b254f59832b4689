#include "tokscope/unigram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "tokscope/error.hpp"
#include "tokscope/unicode.hpp"

namespace tokscope {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stand-in log probability for units whose expected count reached zero;
// exp(-1000) underflows to exactly 0, keeping the probability mass invariant
// while the unit survives until the next prune.
constexpr double kZeroCountLogProb = -1000.0;

inline double log_sum_exp(double x, double y) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  const double hi = std::max(x, y);
  const double lo = std::min(x, y);
  return hi + std::log1p(std::exp(lo - hi));
}

// Unique boundary words with frequencies and per-word scalar boundaries,
// sorted lexicographically; every accumulation below walks them in this
// order, which pins down all floating-point results.
struct WordStats {
  std::vector<std::string> words;
  std::vector<std::uint64_t> freqs;
  std::vector<std::vector<std::size_t>> bounds;
};

WordStats collect_words(const std::vector<LanguageCorpus>& corpora) {
  WordStats stats;
  for (auto& [word, freq] : word_frequencies(corpora)) {
    stats.words.push_back(word);
    stats.freqs.push_back(freq);
    stats.bounds.push_back(unicode::scalar_boundaries(stats.words.back()));
  }
  return stats;
}

// Sorted canonical entry order for trained vocabularies: descending
// log_prob, ties by unit string.
std::vector<std::pair<std::string, double>> canonical_order(
    std::vector<std::pair<std::string, double>> units) {
  std::sort(units.begin(), units.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return units;
}

struct EStepResult {
  std::vector<double> expected_counts;  // indexed by vocab id; 0 for specials
  double log_likelihood = 0.0;
};

// Forward-backward over every word lattice. Lattice edges are non-special
// vocabulary units matching a scalar span; there is no UNK edge, so an
// uncovered character is a contract violation.
EStepResult run_e_step(const ScoredVocabulary& vocab, const WordStats& stats) {
  EStepResult result;
  result.expected_counts.assign(static_cast<std::size_t>(vocab.size()), 0.0);
  const int max_len = std::max(vocab.max_unit_scalars(), 1);

  struct Edge {
    int start;
    int end;
    int id;
  };
  std::vector<Edge> edges;
  std::vector<double> alpha, beta;

  for (std::size_t w = 0; w < stats.words.size(); ++w) {
    const std::string& word = stats.words[w];
    const auto& bounds = stats.bounds[w];
    const int n = static_cast<int>(bounds.size()) - 1;
    if (n == 0) continue;
    const auto freq = static_cast<double>(stats.freqs[w]);

    edges.clear();
    for (int i = 0; i < n; ++i) {
      const int top = std::min(max_len, n - i);
      for (int len = 1; len <= top; ++len) {
        const std::string_view piece(word.data() + bounds[static_cast<std::size_t>(i)],
                                     bounds[static_cast<std::size_t>(i + len)] -
                                         bounds[static_cast<std::size_t>(i)]);
        const auto id = vocab.find(piece);
        if (!id || vocab.is_special(*id)) continue;
        edges.push_back({i, i + len, *id});
      }
    }

    alpha.assign(static_cast<std::size_t>(n) + 1, kNegInf);
    beta.assign(static_cast<std::size_t>(n) + 1, kNegInf);
    alpha[0] = 0.0;
    for (const Edge& e : edges) {
      // Edges are ordered by start, so alpha[e.start] is final here.
      alpha[static_cast<std::size_t>(e.end)] =
          log_sum_exp(alpha[static_cast<std::size_t>(e.end)],
                      alpha[static_cast<std::size_t>(e.start)] +
                          vocab.entry(e.id).log_prob);
    }
    const double z = alpha[static_cast<std::size_t>(n)];
    if (z == kNegInf) {
      throw Error("vocabulary does not cover word: " + word);
    }

    beta[static_cast<std::size_t>(n)] = 0.0;
    for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
      beta[static_cast<std::size_t>(it->start)] =
          log_sum_exp(beta[static_cast<std::size_t>(it->start)],
                      beta[static_cast<std::size_t>(it->end)] +
                          vocab.entry(it->id).log_prob);
    }

    for (const Edge& e : edges) {
      const double posterior =
          std::exp(alpha[static_cast<std::size_t>(e.start)] + vocab.entry(e.id).log_prob +
                   beta[static_cast<std::size_t>(e.end)] - z);
      result.expected_counts[static_cast<std::size_t>(e.id)] += freq * posterior;
    }
    result.log_likelihood += freq * z;
  }
  return result;
}

ScoredVocabulary rebuild(const ScoredVocabulary& vocab,
                         std::vector<std::pair<std::string, double>> units) {
  return ScoredVocabulary(vocab.specials(), canonical_order(std::move(units)));
}

std::pair<ScoredVocabulary, double> em_step_impl(const ScoredVocabulary& vocab,
                                                 const WordStats& stats) {
  const EStepResult e = run_e_step(vocab, stats);
  double total = 0.0;
  for (int id = vocab.num_specials(); id < vocab.size(); ++id) {
    total += e.expected_counts[static_cast<std::size_t>(id)];
  }
  if (total <= 0.0) {
    throw Error("EM collapsed: no expected counts (empty corpus?)");
  }
  const double log_total = std::log(total);
  std::vector<std::pair<std::string, double>> units;
  units.reserve(static_cast<std::size_t>(vocab.size() - vocab.num_specials()));
  for (int id = vocab.num_specials(); id < vocab.size(); ++id) {
    const double count = e.expected_counts[static_cast<std::size_t>(id)];
    const double lp = count > 0.0 ? std::log(count) - log_total : kZeroCountLogProb;
    units.emplace_back(vocab.entry(id).unit, lp);
  }
  return {rebuild(vocab, std::move(units)), e.log_likelihood};
}

ScoredVocabulary prune_impl(const ScoredVocabulary& vocab, const WordStats& stats,
                            double shrinking_factor, std::size_t min_multi_keep) {
  const EStepResult e = run_e_step(vocab, stats);

  struct Scored {
    std::string unit;
    double log_prob;
    double contribution;
  };
  std::vector<Scored> multi;
  std::vector<std::pair<std::string, double>> kept;
  for (int id = vocab.num_specials(); id < vocab.size(); ++id) {
    const VocabEntry& entry = vocab.entry(id);
    if (unicode::scalar_count(entry.unit) <= 1) {
      kept.emplace_back(entry.unit, entry.log_prob);
      continue;
    }
    const double count = e.expected_counts[static_cast<std::size_t>(id)];
    multi.push_back({entry.unit, entry.log_prob, count * -entry.log_prob});
  }

  std::sort(multi.begin(), multi.end(), [](const Scored& a, const Scored& b) {
    if (a.contribution != b.contribution) return a.contribution > b.contribution;
    return a.unit < b.unit;
  });
  std::size_t keep = static_cast<std::size_t>(
      shrinking_factor * static_cast<double>(multi.size()));
  keep = std::max(keep, min_multi_keep);
  keep = std::min(keep, multi.size());
  for (std::size_t i = 0; i < keep; ++i) {
    kept.emplace_back(std::move(multi[i].unit), multi[i].log_prob);
  }

  // Renormalize the surviving probability mass.
  double mass = 0.0;
  for (const auto& [unit, lp] : kept) mass += std::exp(lp);
  if (mass <= 0.0) {
    throw Error("prune removed all probability mass");
  }
  const double log_mass = std::log(mass);
  for (auto& [unit, lp] : kept) lp -= log_mass;

  return rebuild(vocab, std::move(kept));
}

}  // namespace

UnigramModel::UnigramModel(ScoredVocabulary vocab) : vocab_(std::move(vocab)) {
  double min_lp = 0.0;
  for (int id = vocab_.num_specials(); id < vocab_.size(); ++id) {
    min_lp = std::min(min_lp, vocab_.entry(id).log_prob);
  }
  unk_log_prob_ = min_lp - 10.0;
}

ScoredVocabulary seed_vocabulary(const std::vector<LanguageCorpus>& corpora,
                                 int max_piece_length, int seed_vocab_size) {
  if (max_piece_length < 1) {
    throw Error("max_piece_length must be at least 1");
  }
  const WordStats stats = collect_words(corpora);
  if (stats.words.empty()) {
    throw Error("cannot seed a vocabulary from empty corpora");
  }

  // Count every word-internal substring of at most max_piece_length scalars.
  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (std::size_t w = 0; w < stats.words.size(); ++w) {
    const std::string& word = stats.words[w];
    const auto& bounds = stats.bounds[w];
    const int n = static_cast<int>(bounds.size()) - 1;
    const std::uint64_t freq = stats.freqs[w];
    for (int i = 0; i < n; ++i) {
      const int top = std::min(max_piece_length, n - i);
      for (int len = 1; len <= top; ++len) {
        const std::string_view piece(word.data() + bounds[static_cast<std::size_t>(i)],
                                     bounds[static_cast<std::size_t>(i + len)] -
                                         bounds[static_cast<std::size_t>(i)]);
        auto it = counts.find(piece);
        if (it == counts.end()) {
          counts.emplace(std::string(piece), freq);
        } else {
          it->second += freq;
        }
      }
    }
  }

  // All single characters are kept unconditionally; multi-char candidates
  // compete by count * length for the remaining budget.
  struct Candidate {
    std::string_view unit;
    std::uint64_t weight;
  };
  std::vector<Candidate> candidates;
  std::vector<std::pair<std::string_view, std::uint64_t>> singles;
  for (const auto& [unit, count] : counts) {
    const std::size_t scalars = unicode::scalar_count(unit);
    if (scalars <= 1) {
      singles.emplace_back(unit, count);
    } else {
      candidates.push_back({unit, count * scalars});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.unit < b.unit;
  });
  const std::size_t budget = static_cast<std::size_t>(std::max(seed_vocab_size, 0));
  const std::size_t multi_keep =
      budget > singles.size() ? std::min(budget - singles.size(), candidates.size()) : 0;

  std::vector<std::pair<std::string, double>> units;
  units.reserve(singles.size() + multi_keep);
  double total = 0.0;
  for (const auto& [unit, count] : singles) total += static_cast<double>(count);
  for (std::size_t i = 0; i < multi_keep; ++i) {
    total += static_cast<double>(counts.find(candidates[i].unit)->second);
  }
  const double log_total = std::log(total);
  for (const auto& [unit, count] : singles) {
    units.emplace_back(std::string(unit), std::log(static_cast<double>(count)) - log_total);
  }
  for (std::size_t i = 0; i < multi_keep; ++i) {
    const auto count = counts.find(candidates[i].unit)->second;
    units.emplace_back(std::string(candidates[i].unit),
                       std::log(static_cast<double>(count)) - log_total);
  }

  return ScoredVocabulary(default_specials(), canonical_order(std::move(units)));
}

std::pair<ScoredVocabulary, double> em_step(const ScoredVocabulary& vocab,
                                            const std::vector<LanguageCorpus>& corpora) {
  return em_step_impl(vocab, collect_words(corpora));
}

ScoredVocabulary prune(const ScoredVocabulary& vocab,
                       const std::vector<LanguageCorpus>& corpora, double shrinking_factor,
                       std::size_t min_multi_keep) {
  if (shrinking_factor <= 0.0 || shrinking_factor >= 1.0) {
    throw Error("shrinking_factor must lie in (0, 1)");
  }
  return prune_impl(vocab, collect_words(corpora), shrinking_factor, min_multi_keep);
}

UnigramModel train_unigram(const std::vector<LanguageCorpus>& corpora,
                           const UnigramTrainConfig& config) {
  if (config.shrinking_factor <= 0.0 || config.shrinking_factor >= 1.0) {
    throw Error("shrinking_factor must lie in (0, 1)");
  }
  const int seed_size = config.seed_vocab_size > 0
                            ? config.seed_vocab_size
                            : static_cast<int>(std::min<std::int64_t>(
                                  1'000'000, 10LL * config.target_vocab_size));
  ScoredVocabulary vocab = seed_vocabulary(corpora, config.max_piece_length, seed_size);

  std::size_t num_singles = 0;
  for (int id = vocab.num_specials(); id < vocab.size(); ++id) {
    if (unicode::scalar_count(vocab.entry(id).unit) <= 1) ++num_singles;
  }
  const int floor_size = static_cast<int>(num_singles) + vocab.num_specials();
  if (config.target_vocab_size < floor_size) {
    throw Error("target_vocab_size " + std::to_string(config.target_vocab_size) +
                " unachievable: corpus needs at least " + std::to_string(floor_size) +
                " units (characters + specials)");
  }
  const auto min_multi_keep =
      static_cast<std::size_t>(config.target_vocab_size - floor_size);

  const WordStats stats = collect_words(corpora);
  while (vocab.size() > config.target_vocab_size) {
    for (int i = 0; i < std::max(config.em_iterations_per_round, 1); ++i) {
      vocab = em_step_impl(vocab, stats).first;
    }
    // The keep floor makes the last round land exactly on the target: this
    // is the spec's final trim-by-contribution, fused into prune.
    vocab = prune_impl(vocab, stats, config.shrinking_factor, min_multi_keep);
  }

  return UnigramModel(std::move(vocab));
}

std::vector<int> encode_viterbi(const UnigramModel& model, std::string_view normalized_text) {
  return viterbi_segment(model.vocab(), model.unk_log_prob(), normalized_text);
}

std::vector<int> viterbi_segment(const ScoredVocabulary& vocab, double unk_log_prob,
                                 std::string_view normalized_text) {
  std::vector<int> ids;
  if (normalized_text.empty()) return ids;
  const auto bounds = unicode::scalar_boundaries(normalized_text);
  const int n = static_cast<int>(bounds.size()) - 1;
  const int max_len = std::max(vocab.max_unit_scalars(), 1);

  // Right-to-left DP; ties break toward higher score, then fewer tokens,
  // then the lexicographically smallest unit at the current position.
  std::vector<double> score(static_cast<std::size_t>(n) + 1, kNegInf);
  std::vector<int> tokens(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> choice_id(static_cast<std::size_t>(n) + 1, -1);
  std::vector<int> choice_len(static_cast<std::size_t>(n) + 1, 1);
  score[static_cast<std::size_t>(n)] = 0.0;

  for (int i = n - 1; i >= 0; --i) {
    double best_score = kNegInf;
    int best_tokens = 0;
    int best_id = -1;
    int best_len = 1;
    std::string_view best_unit;

    auto consider = [&](double s, int t, int id, int len, std::string_view unit) {
      if (s < best_score) return;
      if (s == best_score) {
        if (t > best_tokens) return;
        if (t == best_tokens && !(unit < best_unit)) return;
      }
      best_score = s;
      best_tokens = t;
      best_id = id;
      best_len = len;
      best_unit = unit;
    };

    const int top = std::min(max_len, n - i);
    bool char_covered = false;
    for (int len = 1; len <= top; ++len) {
      const std::string_view piece(normalized_text.data() + bounds[static_cast<std::size_t>(i)],
                                   bounds[static_cast<std::size_t>(i + len)] -
                                       bounds[static_cast<std::size_t>(i)]);
      const auto id = vocab.find(piece);
      if (!id || vocab.is_special(*id)) continue;
      if (len == 1) char_covered = true;
      consider(vocab.entry(*id).log_prob + score[static_cast<std::size_t>(i + len)],
               tokens[static_cast<std::size_t>(i + len)] + 1, *id, len, piece);
    }
    if (!char_covered) {
      consider(unk_log_prob + score[static_cast<std::size_t>(i + 1)],
               tokens[static_cast<std::size_t>(i + 1)] + 1, kUnkSpecialIndex, 1,
               vocab.entry(kUnkSpecialIndex).unit);
    }

    score[static_cast<std::size_t>(i)] = best_score;
    tokens[static_cast<std::size_t>(i)] = best_tokens;
    choice_id[static_cast<std::size_t>(i)] = best_id;
    choice_len[static_cast<std::size_t>(i)] = best_len;
  }

  for (int i = 0; i < n; i += choice_len[static_cast<std::size_t>(i)]) {
    ids.push_back(choice_id[static_cast<std::size_t>(i)]);
  }
  return ids;
}

std::string decode_unigram(const UnigramModel& model, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= model.vocab().size() || model.vocab().is_special(id)) continue;
    out += model.vocab().entry(id).unit;
  }
  return out;
}

}  // namespace tokscope
