#include "tokscope/merge.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tokscope/error.hpp"
#include "tokscope/unicode.hpp"

namespace tokscope {

MixWeights MixWeights::uniform(const std::vector<LanguageTag>& languages) {
  MixWeights w;
  const double share = 1.0 / static_cast<double>(languages.size());
  for (const LanguageTag& lang : languages) {
    w.weights[lang.code] = share;
  }
  return w;
}

NoOverlapModel::NoOverlapModel(std::vector<std::string> specials, std::vector<Segment> segments)
    : specials_(std::move(specials)), segments_(std::move(segments)) {
  int offset = static_cast<int>(specials_.size());
  std::set<std::string> seen;
  for (Segment& segment : segments_) {
    if (!seen.insert(segment.language.code).second) {
      throw Error("duplicate language in NoOverlap model: " + segment.language.code);
    }
    segment.id_offset = offset;
    offset += segment.vocab.size() - segment.vocab.num_specials();
  }
  total_size_ = offset;
}

const NoOverlapModel::Segment& NoOverlapModel::segment(const LanguageTag& language) const {
  for (const Segment& s : segments_) {
    if (s.language == language) return s;
  }
  throw Error("unknown language tag: " + language.code);
}

bool NoOverlapModel::has_language(const LanguageTag& language) const {
  return std::any_of(segments_.begin(), segments_.end(),
                     [&](const Segment& s) { return s.language == language; });
}

const std::string& NoOverlapModel::unit(int id) const {
  if (id < 0 || id >= total_size_) {
    throw Error("unit id out of range: " + std::to_string(id));
  }
  if (id < static_cast<int>(specials_.size())) {
    return specials_[static_cast<std::size_t>(id)];
  }
  for (const Segment& s : segments_) {
    const int local = id - s.id_offset;
    if (local >= 0 && local < s.vocab.size() - s.vocab.num_specials()) {
      return s.vocab.entry(local + s.vocab.num_specials()).unit;
    }
  }
  throw Error("unit id out of range: " + std::to_string(id));
}

std::pair<int, int> NoOverlapModel::id_range(const LanguageTag& language) const {
  const Segment& s = segment(language);
  return {s.id_offset, s.id_offset + s.vocab.size() - s.vocab.num_specials()};
}

NoOverlapModel merge_no_overlap(
    const std::vector<std::pair<LanguageTag, UnigramModel>>& models,
    const std::vector<std::string>& specials) {
  if (models.size() < 2) {
    throw Error("NoOverlap merging needs at least 2 languages");
  }
  std::vector<NoOverlapModel::Segment> segments;
  segments.reserve(models.size());
  for (const auto& [language, model] : models) {
    if (model.vocab().specials() != specials) {
      throw Error("model for language " + language.code +
                  " does not share the merge's special tokens");
    }
    NoOverlapModel::Segment segment;
    segment.language = language;
    segment.vocab = model.vocab();
    segment.unk_log_prob = model.unk_log_prob();
    segments.push_back(std::move(segment));
  }
  std::sort(segments.begin(), segments.end(),
            [](const auto& a, const auto& b) { return a.language < b.language; });
  return NoOverlapModel(specials, std::move(segments));
}

std::vector<int> encode_no_overlap(const NoOverlapModel& model, std::string_view normalized_text,
                                   const LanguageTag& language) {
  const NoOverlapModel::Segment& segment = model.segment(language);
  std::vector<int> ids = viterbi_segment(segment.vocab, segment.unk_log_prob, normalized_text);
  const int local_specials = segment.vocab.num_specials();
  for (int& id : ids) {
    if (id < local_specials) continue;  // shared specials keep their global ids
    id = id - local_specials + segment.id_offset;
  }
  return ids;
}

std::map<std::string, double> mix_probabilities(
    const std::vector<std::pair<LanguageTag, UnigramModel>>& models, const MixWeights& weights) {
  if (models.empty()) {
    throw Error("TokMix needs at least one model");
  }
  double weight_sum = 0.0;
  for (const auto& [language, model] : models) {
    const auto it = weights.weights.find(language.code);
    if (it == weights.weights.end()) {
      throw Error("missing weight for language " + language.code);
    }
    if (it->second < 0.0) {
      throw Error("negative weight for language " + language.code);
    }
    weight_sum += it->second;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw Error("weights must sum to 1");
  }

  std::map<std::string, double> mixed;
  for (const auto& [language, model] : models) {
    const double w = weights.weights.at(language.code);
    const ScoredVocabulary& vocab = model.vocab();
    for (int id = vocab.num_specials(); id < vocab.size(); ++id) {
      const VocabEntry& entry = vocab.entry(id);
      mixed[entry.unit] += w * std::exp(entry.log_prob);
    }
  }
  return mixed;
}

UnigramModel merge_tokmix(const std::vector<std::pair<LanguageTag, UnigramModel>>& models,
                          const MixWeights& weights, int target_size) {
  const std::map<std::string, double> mixed = mix_probabilities(models, weights);
  const std::vector<std::string>& specials = default_specials();
  for (const auto& [language, model] : models) {
    if (model.vocab().specials() != specials) {
      throw Error("model for language " + language.code +
                  " does not share the default special tokens");
    }
  }

  const int union_size = static_cast<int>(mixed.size()) + static_cast<int>(specials.size());
  if (union_size < target_size) {
    throw Error("union vocabulary (" + std::to_string(union_size) +
                ") is smaller than the target size " + std::to_string(target_size) +
                "; train larger monolingual models");
  }

  // Specials and single characters are pinned; the rest compete by averaged
  // probability (ties: lexicographic).
  std::vector<std::pair<std::string, double>> pinned, competing;
  for (const auto& [unit, prob] : mixed) {
    if (unicode::scalar_count(unit) <= 1) {
      pinned.emplace_back(unit, prob);
    } else {
      competing.emplace_back(unit, prob);
    }
  }
  const std::size_t budget = static_cast<std::size_t>(target_size) - specials.size();
  if (pinned.size() > budget) {
    throw Error("target size too small to retain all single characters");
  }
  std::sort(competing.begin(), competing.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  competing.resize(std::min(competing.size(), budget - pinned.size()));

  std::vector<std::pair<std::string, double>> units;
  units.reserve(pinned.size() + competing.size());
  for (auto& entry : pinned) units.push_back(std::move(entry));
  for (auto& entry : competing) units.push_back(std::move(entry));

  double mass = 0.0;
  for (const auto& [unit, prob] : units) mass += prob;
  if (mass <= 0.0) {
    throw Error("TokMix produced no probability mass");
  }
  const double log_mass = std::log(mass);
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(units.size());
  for (auto& [unit, prob] : units) {
    // Zero-probability survivors (single characters absent from every kept
    // model) get the same floor as zero-count EM units.
    scored.emplace_back(std::move(unit), prob > 0.0 ? std::log(prob) - log_mass : -1000.0);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  return UnigramModel(ScoredVocabulary(specials, std::move(scored)));
}

}  // namespace tokscope
