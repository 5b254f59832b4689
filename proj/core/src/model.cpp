#include "tokscope/model.hpp"

#include <algorithm>

#include "tokscope/error.hpp"

namespace tokscope {

TokenizerModel::TokenizerModel(BpeModel model, std::vector<LanguageTag> languages)
    : method_("bpe"), impl_(std::move(model)), languages_(std::move(languages)) {}

TokenizerModel::TokenizerModel(UnigramModel model, std::vector<LanguageTag> languages)
    : method_("unigram"), impl_(std::move(model)), languages_(std::move(languages)) {}

TokenizerModel::TokenizerModel(NoOverlapModel model) : method_("no_overlap"), impl_(std::move(model)) {
  for (const auto& segment : no_overlap().segments()) {
    languages_.push_back(segment.language);
  }
}

TokenizerModel::TokenizerModel(UnigramModel model, MixWeights weights)
    : method_("tokmix"), impl_(std::move(model)), weights_(std::move(weights)) {
  for (const auto& [code, weight] : weights_->weights) {
    languages_.push_back(LanguageTag{code});
  }
}

int TokenizerModel::vocab_size() const {
  if (is_bpe()) return bpe().vocab_size();
  if (is_no_overlap()) return no_overlap().vocab_size();
  return unigram().vocab().size();
}

const std::string& TokenizerModel::unit(int id) const {
  if (is_bpe()) return bpe().unit(id);
  if (is_no_overlap()) return no_overlap().unit(id);
  return unigram().vocab().entry(id).unit;
}

bool TokenizerModel::is_special(int id) const {
  if (is_bpe()) return bpe().is_special(id);
  if (is_no_overlap()) return no_overlap().is_special(id);
  return unigram().vocab().is_special(id);
}

std::vector<int> TokenizerModel::encode(std::string_view normalized_text,
                                        const LanguageTag* language) const {
  if (is_bpe()) return encode_bpe(bpe(), normalized_text);
  if (is_no_overlap()) {
    if (language == nullptr) {
      throw Error("NoOverlap models require a language tag to encode");
    }
    return encode_no_overlap(no_overlap(), normalized_text, *language);
  }
  return encode_viterbi(unigram(), normalized_text);
}

std::string TokenizerModel::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= vocab_size() || is_special(id)) continue;
    out += unit(id);
  }
  return out;
}

CachedEncoder::CachedEncoder(const TokenizerModel& model, const LanguageTag* language)
    : model_(model) {
  if (language != nullptr) language_ = *language;
  if (model_.is_no_overlap() && !language_) {
    throw Error("NoOverlap models require a language tag to encode");
  }
}

void CachedEncoder::encode_document(std::string_view normalized_document,
                                    std::vector<int>& out) {
  const LanguageTag* lang = language_ ? &*language_ : nullptr;
  for (std::string_view word : boundary_words(normalized_document)) {
    auto it = cache_.find(word);
    if (it == cache_.end()) {
      it = cache_.emplace(std::string(word), model_.encode(word, lang)).first;
    }
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
}

}  // namespace tokscope
