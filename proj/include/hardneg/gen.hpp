#pragma once

#include <optional>
#include <vector>

#include "hardneg/garble.hpp"
#include "hardneg/keywords.hpp"
#include "hardneg/lm.hpp"

namespace hardneg {

enum class GenMethod { gen1, gen2_insert, gen2_start };

const char* gen_method_name(GenMethod m);

struct CandidateResponse {
    std::vector<TokenId> tokens;
    GenMethod method = GenMethod::gen1;
    GarbleProvenance garble;
    std::optional<KeywordCandidate> keyword; // present for gen2 methods
    std::optional<std::size_t> insert_step;  // gen2-insert: 0-based argmax step
    std::uint64_t sub_seed = 0;
};

// Test/audit view into the insert computation of gen2.
struct Gen2Trace {
    DecodeOutput base; // R0 and its probability matrix
    std::size_t insert_step = 0;
};

// Plain sampling from a flow-distorted history.
CandidateResponse gen1(const LanguageModel& lm, const GarbledConversation& garbled,
                       const DecodeParams& params);

// Decodes a draft response while keeping the per-step probability matrix,
// splices the keyword at the step where its first token was most probable
// (ties to the earliest step), discards everything after, and regenerates
// the tail from the spliced prefix.
CandidateResponse gen2_insert(const LanguageModel& lm, const GarbledConversation& garbled,
                              const KeywordCandidate& keyword, const DecodeParams& params,
                              Gen2Trace* trace = nullptr);

// Forces the response to start with the keyword, then samples the rest.
CandidateResponse gen2_start(const LanguageModel& lm, const GarbledConversation& garbled,
                             const KeywordCandidate& keyword, const DecodeParams& params);

struct GenConfig {
    std::size_t n_gen1 = 2;
    std::size_t n_gen2 = 2; // alternating insert/start, insert first
    std::size_t keyword_top_k = 5;
    DecodeParams decode;    // per-candidate seed is derived, not taken from here
    std::uint64_t master_seed = 0;
    bool garble_histories = true;    // false = the no-garble ablation
    bool allow_gen1_fallback = true; // false when gen1 itself is ablated away
};

// Produces n_gen1 gen1 candidates on fresh flow-distortion garbles and n_gen2
// gen2 candidates on fresh context-destruction garbles, keywords round-robin
// over the top-k extraction. gen2 slots fall back to gen1 when the
// conversation has no usable keywords or is too short to destroy; returns an
// empty batch when no strategy applies at all. Deterministic in
// (lm, conv, pool, master seed).
std::vector<CandidateResponse> generate_batch(const LanguageModel& lm, const Conversation& conv,
                                              const UtterancePool& pool, const IdfTable& idf,
                                              const StopwordSet& stopwords, const GenConfig& cfg);

} // namespace hardneg
