// tokscope - train, merge and evaluate multilingual subword tokenizers.
//
// Pipeline: sample -> train -> merge -> tokenize/measure -> report.
// Diagnostics go to stderr; data goes to files or stdout.
// Exit codes: 0 success, 1 usage error, 2 data/validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tokscope/analysis.hpp"
#include "tokscope/corpus.hpp"
#include "tokscope/error.hpp"
#include "tokscope/merge.hpp"
#include "tokscope/metrics.hpp"
#include "tokscope/model.hpp"
#include "tokscope/model_io.hpp"
#include "tokscope/unigram.hpp"

namespace fs = std::filesystem;
using namespace tokscope;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

std::uint64_t env_seed() {
  if (const char* env = std::getenv("TOKSCOPE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(std::string("TOKSCOPE_SEED is not an integer: ") + env);
    }
  }
  return kDefaultSeed;
}

std::string stem_of(const fs::path& path) {
  std::string stem = path.stem().string();
  if (stem.empty()) {
    throw Error("cannot derive a language tag from " + path.string());
  }
  return stem;
}

std::vector<LanguageCorpus> ingest_corpora(const std::vector<std::string>& paths,
                                           const std::vector<std::string>& langs) {
  if (!langs.empty() && langs.size() != paths.size()) {
    throw Error("--lang must be given once per corpus (or not at all)");
  }
  std::vector<LanguageCorpus> corpora;
  corpora.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string lang = langs.empty() ? stem_of(paths[i]) : langs[i];
    corpora.push_back(ingest(paths[i], LanguageTag{lang}));
  }
  return corpora;
}

MixWeights parse_weights(const std::string& spec, const std::vector<LanguageTag>& languages) {
  if (spec.empty()) {
    return MixWeights::uniform(languages);
  }
  MixWeights weights;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t comma = spec.find(',', start);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = spec.substr(start, comma - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error("--weights expects lang=value pairs, got: " + item);
    }
    weights.weights[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    start = comma + 1;
  }
  return weights;
}

std::vector<std::pair<LanguageTag, UnigramModel>> load_monolingual_models(
    const std::vector<std::string>& paths) {
  std::vector<std::pair<LanguageTag, UnigramModel>> models;
  for (const std::string& path : paths) {
    TokenizerModel model = load_model(path);
    if (!model.is_unigram()) {
      throw Error("merging requires Unigram models: " + path);
    }
    if (model.languages().size() != 1) {
      throw Error("model " + path + " must be monolingual (one language tag)");
    }
    models.emplace_back(model.languages()[0], model.unigram());
  }
  return models;
}

void print_value(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::cout << buf << '\n';
}

// Splits "<inputs...> <output>" style positional lists.
std::pair<std::vector<std::string>, std::string> split_trailing_output(
    std::vector<std::string> paths, const std::string& usage) {
  if (paths.size() < 2) {
    throw Error("expected " + usage);
  }
  std::string out = std::move(paths.back());
  paths.pop_back();
  return {std::move(paths), std::move(out)};
}

struct SampleArgs {
  std::vector<std::string> paths;  // inputs... out-dir
  double alpha = 0.25;
  std::uint64_t c_min = 10'000'000;
  std::optional<std::uint64_t> seed;
};

void run_sample(const SampleArgs& args) {
  const auto [inputs, out_dir] =
      split_trailing_output(args.paths, "sample <inputs...> <out-dir>");
  fs::create_directories(out_dir);
  const std::uint64_t seed = args.seed.value_or(env_seed());
  for (const std::string& input : inputs) {
    const std::string lang = stem_of(input);
    LanguageCorpus corpus = ingest(input, LanguageTag{lang});
    std::uint64_t target;
    if (corpus.char_count() < args.c_min) {
      std::cerr << "warning: " << lang << " has only " << corpus.char_count()
                << " chars (< c_min); keeping the whole corpus\n";
      target = corpus.char_count();
    } else {
      target = balanced_sample_size(corpus.char_count(),
                                    {args.c_min, args.alpha, seed});
    }
    LanguageCorpus sampled = subsample(corpus, target, seed);
    save_corpus(sampled, fs::path(out_dir) / (lang + ".txt"));
    std::cerr << "sampled " << lang << ": " << sampled.char_count() << " of "
              << corpus.char_count() << " chars (target " << target << ")\n";
  }
}

struct TrainArgs {
  std::string algorithm;
  std::vector<std::string> paths;  // corpora... model-out
  std::vector<std::string> langs;
  int vocab_size = 120'000;
  // unigram
  int max_piece_length = 16;
  double shrinking_factor = 0.75;
  int seed_vocab_size = 0;
  int em_iterations = 2;
  // bpe
  int alphabet_limit = 1'000;
  std::uint64_t min_frequency = 2;
};

void run_train(const TrainArgs& args) {
  const auto [corpus_paths, model_out] =
      split_trailing_output(args.paths, "train <algorithm> <corpora...> <model-out>");
  const std::vector<LanguageCorpus> corpora = ingest_corpora(corpus_paths, args.langs);
  std::vector<LanguageTag> tags;
  for (const auto& corpus : corpora) tags.push_back(corpus.language());

  if (args.algorithm == "bpe") {
    BpeTrainConfig config;
    config.vocab_size = args.vocab_size;
    config.alphabet_limit = args.alphabet_limit;
    config.min_frequency = args.min_frequency;
    TokenizerModel model(train_bpe(corpora, config), tags);
    save_model(model, model_out);
    std::cerr << "trained bpe model: " << model.vocab_size() << " units, "
              << model.bpe().merges().size() << " merges\n";
  } else {
    UnigramTrainConfig config;
    config.target_vocab_size = args.vocab_size;
    config.max_piece_length = args.max_piece_length;
    config.shrinking_factor = args.shrinking_factor;
    config.seed_vocab_size = args.seed_vocab_size;
    config.em_iterations_per_round = args.em_iterations;
    TokenizerModel model(train_unigram(corpora, config), tags);
    save_model(model, model_out);
    std::cerr << "trained unigram model: " << model.vocab_size() << " units\n";
  }
}

struct MergeArgs {
  std::string method;
  std::vector<std::string> paths;  // models... out
  std::string weights;
  int vocab_size = 120'000;
};

void run_merge(const MergeArgs& args) {
  const auto [model_paths, out] =
      split_trailing_output(args.paths, "merge <method> <models...> <out>");
  const auto models = load_monolingual_models(model_paths);
  if (args.method == "no-overlap") {
    TokenizerModel merged(merge_no_overlap(models, default_specials()));
    save_model(merged, out);
    std::cerr << "merged " << models.size() << " models into a NoOverlap vocabulary of "
              << merged.vocab_size() << " units\n";
  } else {
    std::vector<LanguageTag> tags;
    for (const auto& [tag, model] : models) tags.push_back(tag);
    const MixWeights weights = parse_weights(args.weights, tags);
    TokenizerModel merged(merge_tokmix(models, weights, args.vocab_size), weights);
    save_model(merged, out);
    std::cerr << "merged " << models.size() << " models into a TokMix vocabulary of "
              << merged.vocab_size() << " units\n";
  }
}

struct TokenizeArgs {
  std::string model;
  std::string lang;
  std::string input;
  std::string output;
};

void run_tokenize(const TokenizeArgs& args) {
  const TokenizerModel model = load_model(args.model);
  const std::string lang = args.lang.empty() ? stem_of(args.input) : args.lang;
  const LanguageTag tag{lang};
  const LanguageCorpus corpus = ingest(args.input, tag);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (args.output != "-") {
    file.open(args.output, std::ios::binary);
    if (!file) throw Error("cannot write " + args.output);
    out = &file;
  }
  CachedEncoder encoder(model, &tag);
  std::vector<int> ids;
  for (const std::string& doc : corpus.documents()) {
    ids.clear();
    encoder.encode_document(doc, ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i > 0) *out << ' ';
      *out << ids[i];
    }
    *out << '\n';
  }
}

struct MeasureArgs {
  std::string what;
  std::vector<std::string> paths;
  std::string model;
  std::string lang;
  std::size_t top_k = 10;
  bool exclude_punct = false;
};

void run_measure(const MeasureArgs& args) {
  if (args.what == "dist") {
    if (args.paths.size() != 2) throw Error("measure dist needs <corpus> <out.tsv>");
    const TokenizerModel model = load_model(args.model);
    const std::string lang = args.lang.empty() ? stem_of(args.paths[0]) : args.lang;
    const LanguageCorpus corpus = ingest(args.paths[0], LanguageTag{lang});
    save_distribution(empirical_distribution(model, corpus), args.paths[1]);
    return;
  }
  if (args.what == "ar") {
    if (args.paths.size() != 1) throw Error("measure ar needs <dist.tsv>");
    const TokenDistribution dist = load_distribution(args.paths[0]);
    std::cerr << "rank ties: " << rank_tie_count(dist) << '\n';
    print_value(average_rank(dist));
    return;
  }
  if (args.what == "cpt") {
    if (args.paths.size() != 1) throw Error("measure cpt needs <dist.tsv>");
    print_value(chars_per_token(load_distribution(args.paths[0])));
    return;
  }
  if (args.what == "jsd") {
    if (args.paths.size() != 2) throw Error("measure jsd needs <dist1.tsv> <dist2.tsv>");
    print_value(jsd(load_distribution(args.paths[0]), load_distribution(args.paths[1])));
    return;
  }
  if (args.what == "mrr") {
    if (args.paths.size() != 1) throw Error("measure mrr needs <ranks.txt>");
    print_value(mrr(load_rank_records(args.paths[0])));
    return;
  }
  if (args.what == "diff") {
    if (args.paths.size() != 2) throw Error("measure diff needs <distA.tsv> <distB.tsv>");
    const FrequencyDiff diff =
        vocab_frequency_diff(load_distribution(args.paths[0]), load_distribution(args.paths[1]),
                             args.top_k, args.exclude_punct);
    char buf[40];
    for (const auto& item : diff.a_over_b) {
      std::snprintf(buf, sizeof buf, "%.17g", item.diff);
      std::cout << "a>b\t" << item.unit << '\t' << buf << '\n';
    }
    for (const auto& item : diff.b_over_a) {
      std::snprintf(buf, sizeof buf, "%.17g", item.diff);
      std::cout << "b>a\t" << item.unit << '\t' << buf << '\n';
    }
    return;
  }
  if (args.what == "curve") {
    if (args.paths.size() != 1) throw Error("measure curve needs <dist.tsv>");
    char buf[40];
    for (const auto& [rank, log2p] : sorted_logprob_curve(load_distribution(args.paths[0]))) {
      std::snprintf(buf, sizeof buf, "%.17g", log2p);
      std::cout << rank << '\t' << buf << '\n';
    }
    return;
  }
  throw Error("unknown measure: " + args.what);
}

struct ReportArgs {
  std::vector<std::string> models;
  std::vector<std::string> corpora;
  std::string scores;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void run_report(const ReportArgs& args) {
  std::vector<std::pair<std::string, TokenizerModel>> models;
  for (const std::string& path : args.models) {
    models.emplace_back(stem_of(path), load_model(path));
  }
  const std::vector<LanguageCorpus> corpora = ingest_corpora(args.corpora, {});
  std::optional<ObservationTable> scores;
  if (!args.scores.empty()) {
    scores = ObservationTable::from_csv(args.scores);
  }

  const MetricsReport report =
      build_report(models, corpora, scores, args.seed.value_or(env_seed()));
  save_report(report, args.out);

  // Plot-ready JSD matrices next to the report.
  const fs::path out_path(args.out);
  for (const auto& overlap : report.overlap) {
    fs::path matrix_path = out_path.parent_path() /
                           (out_path.stem().string() + "." + overlap.model + ".jsd.tsv");
    export_matrix(overlap.languages, overlap.matrix, matrix_path);
  }
  std::cerr << "report written to " << args.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tokscope: train, merge and evaluate multilingual subword tokenizers"};
  app.require_subcommand(1);

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Balance corpora across languages");
  sample->add_option("paths", sample_args.paths,
                     "input text files (language = file stem), then the output directory")
      ->required()
      ->expected(-1);
  sample->add_option("--alpha", sample_args.alpha, "balancing exponent in [0,1]");
  sample->add_option("--c-min", sample_args.c_min, "minimum sample size in characters");
  sample->add_option("--seed", sample_args.seed, "sampling seed");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a tokenizer");
  train->add_option("algorithm", train_args.algorithm, "unigram or bpe")
      ->required()
      ->check(CLI::IsMember({"unigram", "bpe"}));
  train->add_option("paths", train_args.paths, "corpus files, then the output model file")
      ->required()
      ->expected(-1);
  train->add_option("--lang", train_args.langs, "language tag per corpus (default: file stems)");
  train->add_option("--vocab-size", train_args.vocab_size, "target vocabulary size");
  train->add_option("--max-piece-length", train_args.max_piece_length,
                    "unigram: longest piece in characters");
  train->add_option("--shrinking-factor", train_args.shrinking_factor,
                    "unigram: fraction of units kept per pruning round");
  train->add_option("--seed-vocab-size", train_args.seed_vocab_size,
                    "unigram: seed vocabulary size (0 = auto)");
  train->add_option("--em-iterations", train_args.em_iterations,
                    "unigram: EM steps per pruning round");
  train->add_option("--alphabet-limit", train_args.alphabet_limit,
                    "bpe: alphabet size cap");
  train->add_option("--min-frequency", train_args.min_frequency,
                    "bpe: minimum merge frequency");

  MergeArgs merge_args;
  auto* merge = app.add_subcommand("merge", "Combine monolingual Unigram tokenizers");
  merge->add_option("method", merge_args.method, "tokmix or no-overlap")
      ->required()
      ->check(CLI::IsMember({"tokmix", "no-overlap"}));
  merge->add_option("paths", merge_args.paths,
                    "monolingual model files, then the output model file")
      ->required()
      ->expected(-1);
  merge->add_option("--weights", merge_args.weights,
                    "tokmix: comma-separated lang=weight pairs (default uniform)");
  merge->add_option("--vocab-size", merge_args.vocab_size, "tokmix: merged vocabulary size");

  TokenizeArgs tokenize_args;
  auto* tokenize = app.add_subcommand("tokenize", "Encode a text file to token ids");
  tokenize->add_option("--model", tokenize_args.model, "model file")->required();
  tokenize->add_option("--lang", tokenize_args.lang, "language tag (default: file stem)");
  tokenize->add_option("input", tokenize_args.input, "input text file")->required();
  tokenize->add_option("output", tokenize_args.output, "output file or -")->required();

  MeasureArgs measure_args;
  auto* measure = app.add_subcommand("measure", "Compute tokenizer measures");
  measure->add_option("what", measure_args.what, "dist|ar|cpt|jsd|mrr|diff|curve")
      ->required()
      ->check(CLI::IsMember({"dist", "ar", "cpt", "jsd", "mrr", "diff", "curve"}));
  measure->add_option("paths", measure_args.paths, "positional inputs/outputs")->expected(-1);
  measure->add_option("--model", measure_args.model, "model file (dist)");
  measure->add_option("--lang", measure_args.lang, "language tag (dist)");
  measure->add_option("--top-k", measure_args.top_k, "entries per direction (diff)");
  measure->add_flag("--exclude-punct", measure_args.exclude_punct,
                    "diff: skip punctuation and special units");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Full AR/CPT/JSD report for models x corpora");
  report->add_option("--models", report_args.models, "model files")->required()->expected(-1);
  report->add_option("--corpora", report_args.corpora, "corpus files")->required()->expected(-1);
  report->add_option("--scores", report_args.scores, "external scores CSV");
  report->add_option("--seed", report_args.seed, "permutation-test seed");
  report->add_option("out", report_args.out, "output report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text on stdout, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (sample->parsed()) run_sample(sample_args);
    if (train->parsed()) run_train(train_args);
    if (merge->parsed()) run_merge(merge_args);
    if (tokenize->parsed()) run_tokenize(tokenize_args);
    if (measure->parsed()) run_measure(measure_args);
    if (report->parsed()) run_report(report_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
