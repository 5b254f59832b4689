#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tokscope/bpe.hpp"
#include "tokscope/merge.hpp"
#include "tokscope/unigram.hpp"

namespace tokscope {

/// Tagged union over the trained tokenizer kinds with training provenance.
/// method() is "bpe", "unigram", "tokmix" (a Unigram model built by merging)
/// or "no_overlap".
class TokenizerModel {
 public:
  TokenizerModel(BpeModel model, std::vector<LanguageTag> languages);
  TokenizerModel(UnigramModel model, std::vector<LanguageTag> languages);
  TokenizerModel(NoOverlapModel model);
  /// TokMix provenance: a Unigram model plus the mixing weights.
  TokenizerModel(UnigramModel model, MixWeights weights);

  const std::string& method() const { return method_; }
  const std::vector<LanguageTag>& languages() const { return languages_; }
  const std::optional<MixWeights>& weights() const { return weights_; }

  bool is_bpe() const { return std::holds_alternative<BpeModel>(impl_); }
  bool is_unigram() const { return std::holds_alternative<UnigramModel>(impl_); }
  bool is_no_overlap() const { return std::holds_alternative<NoOverlapModel>(impl_); }

  const BpeModel& bpe() const { return std::get<BpeModel>(impl_); }
  const UnigramModel& unigram() const { return std::get<UnigramModel>(impl_); }
  const NoOverlapModel& no_overlap() const { return std::get<NoOverlapModel>(impl_); }

  int vocab_size() const;
  const std::string& unit(int id) const;
  bool is_special(int id) const;

  /// Tokenizes normalized text. NoOverlap models require the language tag;
  /// the other kinds ignore it.
  std::vector<int> encode(std::string_view normalized_text,
                          const LanguageTag* language = nullptr) const;

  std::string decode(const std::vector<int>& ids) const;

 private:
  std::string method_;
  std::variant<BpeModel, UnigramModel, NoOverlapModel> impl_;
  std::vector<LanguageTag> languages_;
  std::optional<MixWeights> weights_;
};

/// Tokenizes documents word-by-word with a cache of already-encoded words.
/// All corpus-level tokenization (metrics, the tokenize subcommand) goes
/// through this, so repeated words cost one encode.
class CachedEncoder {
 public:
  CachedEncoder(const TokenizerModel& model, const LanguageTag* language);

  /// Appends the encoding of one normalized document to `out`.
  void encode_document(std::string_view normalized_document, std::vector<int>& out);

 private:
  const TokenizerModel& model_;
  std::optional<LanguageTag> language_;
  std::unordered_map<std::string, std::vector<int>, StringViewHash, std::equal_to<>> cache_;
};

}  // namespace tokscope
