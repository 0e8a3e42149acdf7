#include "hardneg/garble.hpp"

#include <algorithm>

#include "hardneg/errors.hpp"

namespace hardneg {

const char* garble_strategy_name(GarbleStrategy s) {
    switch (s) {
        case GarbleStrategy::flow_distortion: return "flow-distortion";
        case GarbleStrategy::context_destruction: return "context-destruction";
        case GarbleStrategy::none: return "none";
    }
    return "none";
}

bool can_flow_distort(const Conversation& conv) {
    return conv.turns.size() >= 2;
}

bool can_context_destroy(const Conversation& conv, const UtterancePool& pool) {
    return conv.turns.size() >= 3 && pool.has_candidate_outside(conv.id);
}

GarbledConversation flow_distortion(const Conversation& conv, Rng& rng) {
    std::size_t n = conv.turns.size();
    if (n < 2) throw NotGarblableError("flow distortion needs at least 2 turns");

    std::size_t i = rng.uniform_index(n - 1);
    bool noop = false;
    if (conv.turns[i].text == conv.turns[n - 1].text) {
        i = rng.uniform_index(n - 1);
        noop = conv.turns[i].text == conv.turns[n - 1].text;
    }

    GarbledConversation out{conv, {}};
    std::swap(out.conv.turns[i], out.conv.turns[n - 1]);
    out.provenance.strategy = GarbleStrategy::flow_distortion;
    out.provenance.swap_index = i;
    out.provenance.swap_noop = noop;
    return out;
}

GarbledConversation context_destruction(const Conversation& conv, const UtterancePool& pool,
                                        Rng& rng) {
    std::size_t n = conv.turns.size();
    if (n < 3) throw NotGarblableError("context destruction needs at least 3 turns");

    std::size_t r = n == 3 ? 2 : 2 + rng.uniform_index(2);
    GarbledConversation out{conv, {}};
    out.provenance.strategy = GarbleStrategy::context_destruction;
    for (std::size_t idx = n - r; idx < n; ++idx) {
        auto draw = pool.sample(rng, conv.id);
        out.conv.turns[idx] = *draw.utterance;
        out.provenance.replaced.push_back({idx, draw.conv_id, draw.turn_index});
    }
    return out;
}

GarbledConversation passthrough(const Conversation& conv) {
    GarbledConversation out{conv, {}};
    out.provenance.strategy = GarbleStrategy::none;
    return out;
}

} // namespace hardneg
