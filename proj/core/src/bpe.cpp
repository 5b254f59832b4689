#include "tokscope/bpe.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "tokscope/error.hpp"
#include "tokscope/unicode.hpp"
#include "tokscope/vocab.hpp"

namespace tokscope {

namespace {

inline std::uint64_t pack_pair(int left, int right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

}  // namespace

BpeModel::BpeModel(std::vector<std::string> specials, std::vector<std::string> alphabet,
                   std::vector<MergeRule> merges)
    : specials_(std::move(specials)), alphabet_(std::move(alphabet)), merges_(std::move(merges)) {
  units_.reserve(specials_.size() + alphabet_.size() + merges_.size());
  auto add_unit = [&](const std::string& unit) {
    const int id = static_cast<int>(units_.size());
    if (!unit_to_id_.emplace(unit, id).second) {
      throw Error("duplicate unit in BPE vocabulary: " + unit);
    }
    units_.push_back(unit);
    return id;
  };
  for (const std::string& s : specials_) add_unit(s);
  for (const std::string& a : alphabet_) add_unit(a);

  const auto unk = unit_to_id_.find("<unk>");
  if (unk == unit_to_id_.end() || unk->second >= static_cast<int>(specials_.size())) {
    throw Error("BPE specials must include <unk>");
  }
  unk_id_ = unk->second;

  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const MergeRule& rule = merges_[i];
    if (rule.priority != static_cast<int>(i)) {
      throw Error("merge priorities must be contiguous from 0");
    }
    if (rule.result != rule.left + rule.right) {
      throw Error("merge result must equal left + right: " + rule.result);
    }
    const int left_id = find(rule.left);
    const int right_id = find(rule.right);
    if (left_id < 0 || right_id < 0) {
      throw Error("merge references unknown unit: (" + rule.left + ", " + rule.right + ")");
    }
    const int result_id = add_unit(rule.result);
    (void)result_id;
    pair_rank_.emplace(pack_pair(left_id, right_id), static_cast<int>(i));
  }
}

int BpeModel::find(std::string_view unit) const {
  auto it = unit_to_id_.find(unit);
  return it == unit_to_id_.end() ? -1 : it->second;
}

int BpeModel::merge_priority(int left_id, int right_id) const {
  auto it = pair_rank_.find(pack_pair(left_id, right_id));
  return it == pair_rank_.end() ? -1 : it->second;
}

namespace {

// Content words for pair counting: the boundary symbol is stripped off the
// front of each word and never participates in merges.
std::vector<std::pair<std::string, std::uint64_t>> content_word_frequencies(
    const std::vector<LanguageCorpus>& corpora) {
  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (const auto& [word, freq] : word_frequencies(corpora)) {
    std::string_view content = word;
    if (content.size() >= unicode::kBoundary.size() &&
        content.substr(0, unicode::kBoundary.size()) == unicode::kBoundary) {
      content.remove_prefix(unicode::kBoundary.size());
    }
    if (content.empty()) continue;
    auto it = counts.find(content);
    if (it == counts.end()) {
      counts.emplace(std::string(content), freq);
    } else {
      it->second += freq;
    }
  }
  return {counts.begin(), counts.end()};
}

struct HeapEntry {
  std::int64_t count;
  int left;
  int right;
};

// Max-heap on count; equal counts go to the lexicographically smaller
// (left, right) unit-string pair.
struct HeapLess {
  const std::vector<std::string>* units;
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.count != b.count) return a.count < b.count;
    const std::string& al = (*units)[static_cast<std::size_t>(a.left)];
    const std::string& bl = (*units)[static_cast<std::size_t>(b.left)];
    if (al != bl) return al > bl;
    return (*units)[static_cast<std::size_t>(a.right)] >
           (*units)[static_cast<std::size_t>(b.right)];
  }
};

}  // namespace

BpeModel train_bpe(const std::vector<LanguageCorpus>& corpora, const BpeTrainConfig& config) {
  std::uint64_t total_chars = 0;
  for (const LanguageCorpus& corpus : corpora) total_chars += corpus.char_count();
  if (total_chars == 0) {
    throw Error("cannot train BPE on empty corpora");
  }

  // Alphabet: the alphabet_limit most frequent characters.
  std::map<std::string, std::uint64_t> char_counts;
  for (const LanguageCorpus& corpus : corpora) {
    for (const std::string& doc : corpus.documents()) {
      const auto bounds = unicode::scalar_boundaries(doc);
      for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        char_counts[doc.substr(bounds[i], bounds[i + 1] - bounds[i])] += 1;
      }
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> by_freq(char_counts.begin(),
                                                             char_counts.end());
  std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (config.alphabet_limit > 0 &&
      by_freq.size() > static_cast<std::size_t>(config.alphabet_limit)) {
    by_freq.resize(static_cast<std::size_t>(config.alphabet_limit));
  }
  std::vector<std::string> alphabet;
  alphabet.reserve(by_freq.size());
  for (auto& [unit, freq] : by_freq) alphabet.push_back(std::move(unit));

  const std::vector<std::string>& specials = default_specials();
  const int base_size = static_cast<int>(specials.size() + alphabet.size());
  if (config.vocab_size < base_size) {
    throw Error("vocab_size " + std::to_string(config.vocab_size) +
                " is smaller than realized alphabet plus specials (" +
                std::to_string(base_size) + ")");
  }
  const int max_merges = config.vocab_size - base_size;

  // Unit table shared with the heap comparator; merge results are appended.
  std::vector<std::string> units;
  std::unordered_map<std::string, int, StringViewHash, std::equal_to<>> unit_ids;
  for (const std::string& s : specials) {
    unit_ids.emplace(s, static_cast<int>(units.size()));
    units.push_back(s);
  }
  for (const std::string& a : alphabet) {
    unit_ids.emplace(a, static_cast<int>(units.size()));
    units.push_back(a);
  }

  // Words as symbol id sequences; -1 marks an out-of-alphabet character,
  // which merges may not cross.
  const auto words = content_word_frequencies(corpora);
  std::vector<std::vector<int>> word_syms(words.size());
  std::vector<std::uint64_t> word_freq(words.size());
  std::unordered_map<std::uint64_t, std::int64_t> pair_count;
  std::unordered_map<std::uint64_t, std::vector<int>> pair_words;

  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::string& text = words[w].first;
    word_freq[w] = words[w].second;
    const auto bounds = unicode::scalar_boundaries(text);
    std::vector<int>& syms = word_syms[w];
    syms.reserve(bounds.size() - 1);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      const std::string_view ch(text.data() + bounds[i], bounds[i + 1] - bounds[i]);
      const auto it = unit_ids.find(ch);
      syms.push_back(it == unit_ids.end() ? -1 : it->second);
    }
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      if (syms[i] < 0 || syms[i + 1] < 0) continue;
      const std::uint64_t key = pack_pair(syms[i], syms[i + 1]);
      pair_count[key] += static_cast<std::int64_t>(word_freq[w]);
      pair_words[key].push_back(static_cast<int>(w));
    }
  }

  HeapLess less{&units};
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap(less);
  for (const auto& [key, count] : pair_count) {
    heap.push({count, static_cast<int>(key >> 32), static_cast<int>(key & 0xFFFFFFFFu)});
  }

  std::vector<MergeRule> merges;
  const auto min_freq = static_cast<std::int64_t>(config.min_frequency);
  // Pairs whose concatenation collides with an existing unit string (e.g. a
  // literal "<s>" in the corpus) can never become a fresh unit.
  std::unordered_set<std::uint64_t> ineligible;

  while (static_cast<int>(merges.size()) < max_merges && !heap.empty()) {
    const HeapEntry top = heap.top();
    heap.pop();
    const std::uint64_t key = pack_pair(top.left, top.right);
    if (ineligible.contains(key)) continue;
    const auto cur_it = pair_count.find(key);
    const std::int64_t current = cur_it == pair_count.end() ? 0 : cur_it->second;
    if (current != top.count) {
      // Stale entry; re-queue at the true count so the pair stays reachable.
      if (current >= min_freq) heap.push({current, top.left, top.right});
      continue;
    }
    if (current < min_freq) continue;

    const std::string& left = units[static_cast<std::size_t>(top.left)];
    const std::string& right = units[static_cast<std::size_t>(top.right)];
    const std::string result = left + right;
    if (unit_ids.contains(result)) {
      ineligible.insert(key);
      continue;
    }
    const int new_id = static_cast<int>(units.size());
    unit_ids.emplace(result, new_id);
    units.push_back(result);
    merges.push_back({left, right, result, static_cast<int>(merges.size())});

    // Rewrite every word containing the pair. Counts are maintained by
    // removing the word's old adjacencies and adding the new ones; pairs
    // whose count may have grown get fresh heap entries (decreases are
    // corrected lazily by the staleness check above).
    auto wl_it = pair_words.find(key);
    std::vector<int> affected = wl_it == pair_words.end() ? std::vector<int>{} : wl_it->second;
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    std::unordered_set<std::uint64_t> touched;

    for (int w : affected) {
      std::vector<int>& syms = word_syms[static_cast<std::size_t>(w)];
      const auto freq = static_cast<std::int64_t>(word_freq[static_cast<std::size_t>(w)]);
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (syms[i] < 0 || syms[i + 1] < 0) continue;
        pair_count[pack_pair(syms[i], syms[i + 1])] -= freq;
      }
      std::vector<int> out;
      out.reserve(syms.size());
      std::size_t i = 0;
      while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i] == top.left && syms[i + 1] == top.right) {
          out.push_back(new_id);
          i += 2;
        } else {
          out.push_back(syms[i]);
          ++i;
        }
      }
      syms = std::move(out);
      for (std::size_t j = 0; j + 1 < syms.size(); ++j) {
        if (syms[j] < 0 || syms[j + 1] < 0) continue;
        const std::uint64_t k = pack_pair(syms[j], syms[j + 1]);
        pair_count[k] += freq;
        pair_words[k].push_back(w);
        touched.insert(k);
      }
    }
    pair_count.erase(key);
    pair_words.erase(key);

    for (std::uint64_t k : touched) {
      const auto it = pair_count.find(k);
      if (it != pair_count.end() && it->second >= min_freq && !ineligible.contains(k)) {
        heap.push({it->second, static_cast<int>(k >> 32), static_cast<int>(k & 0xFFFFFFFFu)});
      }
    }
  }

  return BpeModel(specials, std::move(alphabet), std::move(merges));
}

namespace {

// In-word merge application: repeatedly apply the present pair with the
// lowest priority rank, leftmost first. Equivalent to exhaustive application
// of the rules in priority order.
void apply_merges(const BpeModel& model, std::vector<int>& syms) {
  const std::size_t n = syms.size();
  if (n < 2) return;
  std::vector<int> next(n), prev(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = i + 1 < n ? static_cast<int>(i + 1) : -1;
    prev[i] = i > 0 ? static_cast<int>(i - 1) : -1;
  }

  struct Candidate {
    int rank;
    int pos;
    int left;
    int right;
  };
  struct CandidateGreater {
    bool operator()(const Candidate& a, const Candidate& b) const {
      if (a.rank != b.rank) return a.rank > b.rank;
      return a.pos > b.pos;
    }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, CandidateGreater> heap;

  auto push_candidate = [&](int pos) {
    const int nxt = next[static_cast<std::size_t>(pos)];
    if (nxt < 0) return;
    const int l = syms[static_cast<std::size_t>(pos)];
    const int r = syms[static_cast<std::size_t>(nxt)];
    if (l == model.unk_id() || r == model.unk_id()) return;
    const int rank = model.merge_priority(l, r);
    if (rank >= 0) heap.push({rank, pos, l, r});
  };
  for (std::size_t i = 0; i + 1 < n; ++i) push_candidate(static_cast<int>(i));

  const int merged_base = static_cast<int>(model.specials().size() + model.alphabet().size());
  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    const auto pos = static_cast<std::size_t>(c.pos);
    if (!alive[pos] || syms[pos] != c.left) continue;
    const int nxt = next[pos];
    if (nxt < 0 || !alive[static_cast<std::size_t>(nxt)] ||
        syms[static_cast<std::size_t>(nxt)] != c.right) {
      continue;
    }
    syms[pos] = merged_base + c.rank;
    alive[static_cast<std::size_t>(nxt)] = false;
    const int after = next[static_cast<std::size_t>(nxt)];
    next[pos] = after;
    if (after >= 0) prev[static_cast<std::size_t>(after)] = c.pos;
    if (prev[pos] >= 0) push_candidate(prev[pos]);
    push_candidate(c.pos);
  }

  std::vector<int> out;
  out.reserve(n);
  for (int i = 0; i >= 0; i = next[static_cast<std::size_t>(i)]) {
    if (alive[static_cast<std::size_t>(i)]) out.push_back(syms[static_cast<std::size_t>(i)]);
  }
  syms = std::move(out);
}

}  // namespace

std::vector<int> encode_bpe(const BpeModel& model, std::string_view normalized_text) {
  std::vector<int> ids;
  if (normalized_text.empty()) return ids;
  const int boundary_id = model.find(unicode::kBoundary);

  std::size_t pos = 0;
  std::vector<int> segment;
  auto flush_segment = [&] {
    if (segment.empty()) return;
    apply_merges(model, segment);
    ids.insert(ids.end(), segment.begin(), segment.end());
    segment.clear();
  };

  while (pos < normalized_text.size()) {
    const std::size_t start = pos;
    const char32_t scalar = unicode::decode_scalar(normalized_text, pos);
    if (scalar == unicode::kBoundaryScalar) {
      flush_segment();
      ids.push_back(boundary_id >= 0 ? boundary_id : model.unk_id());
      continue;
    }
    const int id = model.find(normalized_text.substr(start, pos - start));
    segment.push_back(id >= 0 ? id : model.unk_id());
  }
  flush_segment();
  return ids;
}

std::string decode_bpe(const BpeModel& model, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= model.vocab_size() || model.is_special(id)) continue;
    out += model.unit(id);
  }
  return out;
}

}  // namespace tokscope
