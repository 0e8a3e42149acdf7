#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardneg/metrics.hpp"
#include "hardneg/select.hpp"

namespace hardneg {

// File-level plumbing shared by the CLI subcommands. Every function throws
// ConfigError for bad or missing inputs (exit 2 territory) and other
// exceptions for runtime failures (exit 1).

DataFormat resolve_format(const std::string& format_flag, const std::string& path);
Split resolve_split(const std::string& split_flag);
TokenizerMode resolve_tokenizer_mode(const std::string& flag);

// Expands `--config FILE` (plain `key=value` lines, '#' comments) into
// `--key=value` tokens appended after the explicit arguments. Keys already
// given on the command line are skipped, so explicit flags win.
std::vector<std::string> apply_config_file(std::vector<std::string> args);

// Existence-checked load.
Dataset load_dataset_checked(const std::string& path, const std::string& format_flag,
                             const std::string& split_flag);

StopwordSet load_stopwords_checked(const std::string& path); // "" -> empty set

// Corpus-level response perplexity exp(-sum logp / sum K) over golden
// responses (all responses when no positives exist).
double response_perplexity(const LanguageModel& lm, const Dataset& ds);

void write_audit_jsonl(const std::vector<AuditRecord>& audit, const LanguageModel& lm,
                       const std::string& path, const FileMeta& meta);

struct TrainLmOptions {
    std::string train, val, out;
    std::string format, split = "train";
    std::string tokenizer = "whitespace";
    int order = 3;
    double discount = 0.75;
};
void cmd_train_lm(const TrainLmOptions& opts);

struct StatsOptions {
    std::string input, format, split = "train";
};
void cmd_stats(const StatsOptions& opts);

struct GarbleOptions {
    std::string input, pool, out;
    std::string format, split = "train";
    std::string strategy = "both"; // flow | destroy | both
    std::uint64_t seed = 0;
};
void cmd_garble(const GarbleOptions& opts);

struct KeywordsOptions {
    std::string input, idf_corpus, stopwords;
    std::string format, split = "train";
    std::string tokenizer = "whitespace";
    std::size_t top_k = 5;
};
void cmd_keywords(const KeywordsOptions& opts);

struct GenerateOptions {
    std::string input, model, pool, stopwords, out;
    std::string format, split = "train";
    std::uint64_t seed = 0;
    std::size_t n_gen1 = 2, n_gen2 = 2, keyword_top_k = 5;
    double top_p = 0.9;
    std::size_t max_length = 30, min_length = 2;
};
void cmd_generate(const GenerateOptions& opts);

struct AugmentOptions {
    std::string train, model, pool, stopwords, out, audit, threshold_sample;
    std::string format, split = "train";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t n_gen1 = 2, n_gen2 = 2, keyword_top_k = 5;
    double top_p = 0.9;
    std::size_t max_length = 30, min_length = 2;
    std::string threshold = "q0.5";
    bool no_garble = false, no_filter = false, no_gen1 = false, no_gen2 = false,
         random_da = false;
};
void cmd_augment(const AugmentOptions& opts);

struct TrainMatcherOptions {
    std::string train, idf_corpus, stopwords, out;
    std::string format, split = "train";
    std::string tokenizer = "whitespace";
    double learning_rate = 0.5;
    std::size_t epochs = 300;
    double l2 = 1e-4;
    std::uint64_t seed = 1;
};
void cmd_train_matcher(const TrainMatcherOptions& opts);

struct EvalOptions {
    std::string test, matcher, idf_corpus, stopwords, report;
    std::string format, split = "test";
    std::string tokenizer = "whitespace";
    std::size_t candidates_per_context = 10; // 0 = variable
};
void cmd_eval(const EvalOptions& opts);

struct InspectOptions {
    std::string audit;
    std::string id;     // pick by conversation id
    std::size_t limit = 1;
    std::uint64_t seed = 0; // sample when no id given: 0 = first records
};
void cmd_inspect(const InspectOptions& opts);

} // namespace hardneg
