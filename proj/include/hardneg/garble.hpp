#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

enum class GarbleStrategy {
    flow_distortion,
    context_destruction,
    none, // ablation bypass: history passed through untouched
};

const char* garble_strategy_name(GarbleStrategy s);

struct ReplacedTurn {
    std::size_t turn_index; // 0-based position in the garbled history
    std::string source_conv_id;
    std::size_t source_turn_index;
};

struct GarbleProvenance {
    GarbleStrategy strategy = GarbleStrategy::none;
    // flow distortion: 0-based index swapped with the final turn
    std::optional<std::size_t> swap_index;
    bool swap_noop = false; // both resampled picks equalled the final turn textually
    // context destruction
    std::vector<ReplacedTurn> replaced;
};

struct GarbledConversation {
    Conversation conv; // same id and turn count as the source
    GarbleProvenance provenance;
};

bool can_flow_distort(const Conversation& conv);                              // N >= 2
bool can_context_destroy(const Conversation& conv, const UtterancePool& pool); // N >= 3, pool usable

// Swaps a uniformly drawn turn (excluding the last) with the last turn. If
// the drawn turn equals the last one textually, redraws once and then
// proceeds regardless.
GarbledConversation flow_distortion(const Conversation& conv, Rng& rng);

// Replaces the latest r turns (r uniform in {2,3}, clamped to 2 when N == 3
// so at least one original turn survives) with pool utterances drawn outside
// this conversation.
GarbledConversation context_destruction(const Conversation& conv, const UtterancePool& pool,
                                        Rng& rng);

// Untouched copy tagged GarbleStrategy::none, for the no-garble ablation.
GarbledConversation passthrough(const Conversation& conv);

} // namespace hardneg
