#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardneg/gen.hpp"

namespace hardneg {

struct ScoredCandidate {
    CandidateResponse candidate;
    double ppl = 0.0; // against the ORIGINAL history, never the garbled one
};

struct SelectionResult {
    Utterance response;
    Origin origin = Origin::fallback_random;
    std::optional<double> chosen_ppl;
    std::optional<std::size_t> chosen_index; // into `batch`
    std::vector<ScoredCandidate> batch;      // kept for the audit trail
};

struct ThresholdSpec {
    enum class Kind { absolute, quantile };
    Kind kind = Kind::quantile;
    double value = 0.5;

    // Accepts a plain number ("7.5") or a quantile ("q0.5").
    static ThresholdSpec parse(const std::string& text);
    std::string to_string() const;
};

// Perplexity of each candidate w.r.t. the original conversation history,
// input order preserved.
std::vector<ScoredCandidate> score_candidates(const LanguageModel& lm,
                                              const Conversation& original,
                                              std::vector<CandidateResponse> candidates);

// Absolute specs pass through; quantile specs resolve to the q-quantile
// (linear interpolation) of golden-response perplexities over at most
// `max_contexts` positive examples of `sample`.
double resolve_threshold(const ThresholdSpec& spec, const LanguageModel& lm,
                         const Dataset& sample, std::size_t max_contexts = 1000);

// Highest-perplexity candidate if it reaches the threshold (ties to the
// earliest), otherwise a random utterance from the pool outside the
// conversation, tagged fallback-random.
SelectionResult select_negative(const LanguageModel& lm, std::vector<ScoredCandidate> scored,
                                double threshold, const UtterancePool& pool,
                                const std::string& exclude_conv_id, Rng& rng);

// The no-filter ablation: uniform random choice among the candidates.
SelectionResult select_random(const LanguageModel& lm, std::vector<ScoredCandidate> scored,
                              const UtterancePool& pool, const std::string& exclude_conv_id,
                              Rng& rng);

struct AugmentConfig {
    GenConfig gen;
    ThresholdSpec threshold;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    // ablations
    bool no_filter = false;
    bool random_da = false;
    // optional pre-resolved threshold (skips resolve_threshold)
    std::optional<double> resolved_threshold;
};

struct AuditRecord {
    std::string conv_id;
    std::vector<std::string> context_turns;
    std::vector<ScoredCandidate> batch;
    std::optional<std::size_t> chosen_index;
    Origin origin = Origin::fallback_random;
    std::string response_text;
    double threshold = 0.0;
};

struct AugmentResult {
    Dataset dataset;
    std::vector<AuditRecord> audit; // one record per context, in output order
    double resolved_threshold = 0.0;
};

// Expects the 1:1 layout (exactly one golden and one random negative per
// context) and appends one selected negative per context, giving the 1:2
// ratio. `pool` supplies replacement and fallback utterances; `sample` feeds
// quantile threshold resolution. Byte-identical output for a fixed config and
// seed, independent of worker count.
AugmentResult augment_dataset(const Dataset& train, const LanguageModel& lm, const Dataset& pool,
                              const IdfTable& idf, const StopwordSet& stopwords,
                              const AugmentConfig& cfg, const Dataset* threshold_sample = nullptr);

} // namespace hardneg
