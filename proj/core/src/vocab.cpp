#include "tokscope/vocab.hpp"

#include <cmath>

#include "tokscope/error.hpp"
#include "tokscope/unicode.hpp"

namespace tokscope {

const std::vector<std::string>& default_specials() {
  static const std::vector<std::string> specials = {"<s>", "</s>", "<pad>", "<unk>", "<mask>"};
  return specials;
}

ScoredVocabulary::ScoredVocabulary(std::vector<std::string> specials,
                                   std::vector<std::pair<std::string, double>> scored_units) {
  num_specials_ = static_cast<int>(specials.size());
  entries_.reserve(specials.size() + scored_units.size());
  for (std::string& unit : specials) {
    const int id = static_cast<int>(entries_.size());
    if (!index_.emplace(unit, id).second) {
      throw Error("duplicate special token: " + unit);
    }
    entries_.push_back({std::move(unit), 0.0, id});
  }
  for (auto& [unit, log_prob] : scored_units) {
    const int id = static_cast<int>(entries_.size());
    if (!index_.emplace(unit, id).second) {
      throw Error("duplicate vocabulary unit: " + unit);
    }
    const int scalars = static_cast<int>(unicode::scalar_count(unit));
    max_unit_scalars_ = std::max(max_unit_scalars_, scalars);
    entries_.push_back({std::move(unit), log_prob, id});
  }
}

std::optional<int> ScoredVocabulary::find(std::string_view unit) const {
  auto it = index_.find(unit);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double ScoredVocabulary::probability_mass() const {
  double mass = 0.0;
  for (std::size_t i = static_cast<std::size_t>(num_specials_); i < entries_.size(); ++i) {
    mass += std::exp(entries_[i].log_prob);
  }
  return mass;
}

std::vector<std::string> ScoredVocabulary::specials() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(num_specials_));
  for (int i = 0; i < num_specials_; ++i) out.push_back(entries_[static_cast<std::size_t>(i)].unit);
  return out;
}

}  // namespace tokscope
