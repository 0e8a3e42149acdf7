#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/vocab.hpp"

namespace hardneg {

// Dense probability vector over the vocabulary; sums to 1 within 1e-9.
using ProbDist = std::vector<double>;

struct SequenceScore {
    double log_prob = 0.0;                  // natural log, sum of the entries below
    std::vector<double> token_log_probs;
    std::size_t length() const { return token_log_probs.size(); }
};

struct DecodeParams {
    double top_p = 0.9;          // in (0, 1]
    std::size_t max_length = 30; // response token cap
    std::size_t min_length = 2;  // EOS masked until this many tokens are out
    std::uint64_t seed = 0;
};

void validate(const DecodeParams& params);

struct DecodeOutput {
    std::vector<TokenId> tokens;       // K tokens; terminating EOS not included
    std::vector<ProbDist> prob_matrix; // K rows, the pre-nucleus distribution per step
};

// Generation/scoring backend. The n-gram model and the external line-protocol
// adapter both implement this, so everything downstream is backend-agnostic.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual const Vocab& vocab() const = 0;
    virtual const Tokenizer& tokenizer() const = 0;

    // Full-support distribution over the vocabulary given a (possibly empty)
    // id context.
    virtual ProbDist next_token_dist(std::span<const TokenId> context) const = 0;

    // Chain-rule conditional log-probs of `response` given `context`.
    // Default walks next_token_dist; backends may answer directly.
    virtual std::vector<double> token_log_probs(std::span<const TokenId> context,
                                                std::span<const TokenId> response) const;
};

// History encoding used everywhere: BOS t(u_1) SEP t(u_2) SEP ... t(u_N) SEP.
// The trailing SEP is the position from which the response is predicted.
std::vector<TokenId> encode_history(const LanguageModel& lm, const Conversation& conv);

// Full training encoding: history ++ response ++ EOS.
std::vector<TokenId> encode_dialogue(const LanguageModel& lm, const Conversation& conv,
                                     const Utterance& response);

// Log P(response | history) summed token-by-token; the response tokens only,
// no EOS term.
SequenceScore score_sequence(const LanguageModel& lm, const Conversation& history,
                             std::span<const TokenId> response);

// exp(-log_prob / K).
double perplexity(const SequenceScore& score);

// Nucleus: smallest prefix of tokens sorted by descending probability (ties
// by ascending id) whose cumulative mass reaches p; renormalized inside the
// nucleus, zero elsewhere.
ProbDist top_p_filter(const ProbDist& dist, double p);

// Samples token-by-token from top_p_filter of each step distribution. Each
// stored matrix row is the distribution the nucleus was computed from: the
// full-vocabulary dist after min-length EOS masking, before nucleus
// filtering. Stops at EOS (not emitted) or max_length.
DecodeOutput decode(const LanguageModel& lm, const Conversation& history,
                    const DecodeParams& params);

// Same sampling, conditioned on history ++ prefix; output begins with prefix
// exactly. A prefix already containing EOS is returned unchanged. min/max
// lengths bound the total output length.
std::vector<TokenId> continue_decode(const LanguageModel& lm, const Conversation& history,
                                     std::span<const TokenId> prefix, const DecodeParams& params);

} // namespace hardneg
