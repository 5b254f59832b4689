#pragma once

#include <filesystem>
#include <string>

#include "tokscope/model.hpp"

namespace tokscope {

/// Canonical single-line JSON serialization of a model. Field order is fixed
/// and doubles are written with 17 significant digits, so equal models always
/// produce byte-identical output.
std::string model_to_json(const TokenizerModel& model);

TokenizerModel model_from_json(const std::string& json_text);

void save_model(const TokenizerModel& model, const std::filesystem::path& path);
TokenizerModel load_model(const std::filesystem::path& path);

/// FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits.
/// Distributions computed under different models never compare as compatible.
std::string model_hash(const TokenizerModel& model);

}  // namespace tokscope
