#include "tokscope/model_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokscope/error.hpp"

namespace tokscope {

namespace {

using json = nlohmann::json;

void append_escaped(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

// 17 significant digits: enough for bit-stable double round-trips.
void append_double(std::string& out, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  out += buf;
}

void append_string_array(std::string& out, const std::vector<std::string>& items) {
  out.push_back('[');
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out.push_back(',');
    append_escaped(out, items[i]);
  }
  out.push_back(']');
}

void append_scored_vocab(std::string& out, const ScoredVocabulary& vocab) {
  out += "[";
  for (int id = 0; id < vocab.size(); ++id) {
    if (id > 0) out.push_back(',');
    const VocabEntry& entry = vocab.entry(id);
    out += "{\"id\":" + std::to_string(entry.id) + ",\"unit\":";
    append_escaped(out, entry.unit);
    out += ",\"log_prob\":";
    append_double(out, entry.log_prob);
    out.push_back('}');
  }
  out.push_back(']');
}

std::string languages_json(const std::vector<LanguageTag>& languages) {
  std::string out = "[";
  for (std::size_t i = 0; i < languages.size(); ++i) {
    if (i > 0) out.push_back(',');
    append_escaped(out, languages[i].code);
  }
  out.push_back(']');
  return out;
}

ScoredVocabulary vocab_from_json(const json& node, const std::vector<std::string>& specials) {
  std::vector<std::pair<std::string, double>> units;
  // Entries arrive in id order: the declared specials first, then units.
  std::size_t seen = 0;
  for (const auto& item : node) {
    const std::string unit = item.at("unit").get<std::string>();
    const double lp = item.at("log_prob").get<double>();
    const int id = item.at("id").get<int>();
    if (id != static_cast<int>(seen)) {
      throw Error("vocabulary ids must be dense from 0");
    }
    if (seen < specials.size()) {
      if (unit != specials[seen]) {
        throw Error("vocabulary entry " + std::to_string(id) +
                    " does not match the declared special " + specials[seen]);
      }
    } else {
      units.emplace_back(unit, lp);
    }
    ++seen;
  }
  return ScoredVocabulary(specials, std::move(units));
}

}  // namespace

std::string model_to_json(const TokenizerModel& model) {
  std::string out;
  if (model.is_bpe()) {
    const BpeModel& bpe = model.bpe();
    out += "{\"type\":\"bpe\",\"languages\":" + languages_json(model.languages());
    out += ",\"specials\":";
    append_string_array(out, bpe.specials());
    out += ",\"alphabet\":";
    append_string_array(out, bpe.alphabet());
    out += ",\"merges\":[";
    for (std::size_t i = 0; i < bpe.merges().size(); ++i) {
      if (i > 0) out.push_back(',');
      out.push_back('[');
      append_escaped(out, bpe.merges()[i].left);
      out.push_back(',');
      append_escaped(out, bpe.merges()[i].right);
      out.push_back(']');
    }
    out += "],\"vocab\":[";
    for (int id = 0; id < bpe.vocab_size(); ++id) {
      if (id > 0) out.push_back(',');
      out += "{\"id\":" + std::to_string(id) + ",\"unit\":";
      append_escaped(out, bpe.unit(id));
      out.push_back('}');
    }
    out += "]}";
    return out;
  }

  if (model.is_no_overlap()) {
    const NoOverlapModel& no = model.no_overlap();
    out += "{\"type\":\"no_overlap\",\"specials\":";
    append_string_array(out, no.specials());
    out += ",\"segments\":{";
    bool first = true;
    for (const auto& segment : no.segments()) {
      if (!first) out.push_back(',');
      first = false;
      append_escaped(out, segment.language.code);
      out += ":{\"id_offset\":" + std::to_string(segment.id_offset) + ",\"vocab\":";
      append_scored_vocab(out, segment.vocab);
      out.push_back('}');
    }
    out += "}}";
    return out;
  }

  // unigram / tokmix share the layout; tokmix adds its provenance header.
  out += "{\"type\":\"unigram\"";
  if (model.method() == "tokmix") {
    out += ",\"method\":\"tokmix\",\"weights\":{";
    bool first = true;
    for (const auto& [code, weight] : model.weights()->weights) {
      if (!first) out.push_back(',');
      first = false;
      append_escaped(out, code);
      out.push_back(':');
      append_double(out, weight);
    }
    out.push_back('}');
  } else {
    out += ",\"languages\":" + languages_json(model.languages());
  }
  out += ",\"specials\":";
  append_string_array(out, model.unigram().vocab().specials());
  out += ",\"vocab\":";
  append_scored_vocab(out, model.unigram().vocab());
  out.push_back('}');
  return out;
}

TokenizerModel model_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("cannot parse model JSON: ") + e.what());
  }
  const std::string type = doc.at("type").get<std::string>();

  std::vector<LanguageTag> languages;
  if (doc.contains("languages")) {
    for (const auto& code : doc.at("languages")) {
      languages.push_back(LanguageTag{code.get<std::string>()});
    }
  }

  if (type == "bpe") {
    std::vector<std::string> specials = doc.at("specials").get<std::vector<std::string>>();
    std::vector<std::string> alphabet = doc.at("alphabet").get<std::vector<std::string>>();
    std::vector<MergeRule> merges;
    int priority = 0;
    for (const auto& pair : doc.at("merges")) {
      const std::string left = pair.at(0).get<std::string>();
      const std::string right = pair.at(1).get<std::string>();
      merges.push_back({left, right, left + right, priority++});
    }
    return {BpeModel(std::move(specials), std::move(alphabet), std::move(merges)),
            std::move(languages)};
  }

  if (type == "no_overlap") {
    std::vector<std::string> specials = doc.at("specials").get<std::vector<std::string>>();
    std::vector<NoOverlapModel::Segment> segments;
    const auto& seg_node = doc.at("segments");
    for (auto it = seg_node.begin(); it != seg_node.end(); ++it) {
      NoOverlapModel::Segment segment;
      segment.language = LanguageTag{it.key()};
      segment.vocab = vocab_from_json(it.value().at("vocab"), specials);
      segment.unk_log_prob = UnigramModel(segment.vocab).unk_log_prob();
      segments.push_back(std::move(segment));
    }
    std::sort(segments.begin(), segments.end(),
              [](const auto& a, const auto& b) { return a.language < b.language; });
    return {NoOverlapModel(std::move(specials), std::move(segments))};
  }

  if (type == "unigram") {
    const auto specials = doc.at("specials").get<std::vector<std::string>>();
    UnigramModel unigram(vocab_from_json(doc.at("vocab"), specials));
    if (doc.contains("method") && doc.at("method").get<std::string>() == "tokmix") {
      MixWeights weights;
      for (auto it = doc.at("weights").begin(); it != doc.at("weights").end(); ++it) {
        weights.weights[it.key()] = it.value().get<double>();
      }
      return {std::move(unigram), std::move(weights)};
    }
    return {std::move(unigram), std::move(languages)};
  }

  throw Error("unknown model type: " + type);
}

void save_model(const TokenizerModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write model file: " + path.string());
  }
  out << model_to_json(model) << '\n';
}

TokenizerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open model file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

std::string model_hash(const TokenizerModel& model) {
  const std::string canonical = model_to_json(model);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tokscope
