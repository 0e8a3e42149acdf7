#include "hardneg/gen.hpp"

#include <stdexcept>

#include "hardneg/errors.hpp"

namespace hardneg {

const char* gen_method_name(GenMethod m) {
    switch (m) {
        case GenMethod::gen1: return "gen1";
        case GenMethod::gen2_insert: return "gen2-insert";
        case GenMethod::gen2_start: return "gen2-start";
    }
    return "gen1";
}

namespace {

void require_strategy(const GarbledConversation& garbled, GarbleStrategy expected) {
    GarbleStrategy got = garbled.provenance.strategy;
    if (got != expected && got != GarbleStrategy::none)
        throw std::invalid_argument(std::string("wrong garble strategy: expected ") +
                                    garble_strategy_name(expected) + ", got " +
                                    garble_strategy_name(got));
}

std::vector<TokenId> keyword_ids(const LanguageModel& lm, const KeywordCandidate& kw) {
    if (kw.tokens.empty()) throw std::invalid_argument("empty keyword");
    std::vector<TokenId> ids;
    ids.reserve(kw.tokens.size());
    for (const auto& tok : kw.tokens) {
        TokenId id = lm.vocab().id_of(tok);
        if (Vocab::is_reserved(id))
            throw std::invalid_argument("keyword token \"" + tok + "\" not in vocabulary");
        ids.push_back(id);
    }
    return ids;
}

} // namespace

CandidateResponse gen1(const LanguageModel& lm, const GarbledConversation& garbled,
                       const DecodeParams& params) {
    require_strategy(garbled, GarbleStrategy::flow_distortion);
    DecodeOutput out = decode(lm, garbled.conv, params);
    CandidateResponse cand;
    cand.tokens = std::move(out.tokens);
    cand.method = GenMethod::gen1;
    cand.garble = garbled.provenance;
    cand.sub_seed = params.seed;
    return cand;
}

CandidateResponse gen2_insert(const LanguageModel& lm, const GarbledConversation& garbled,
                              const KeywordCandidate& keyword, const DecodeParams& params,
                              Gen2Trace* trace) {
    require_strategy(garbled, GarbleStrategy::context_destruction);
    auto kw_ids = keyword_ids(lm, keyword);

    DecodeOutput base = decode(lm, garbled.conv, params);
    auto column = static_cast<std::size_t>(kw_ids.front());
    std::size_t best = 0;
    for (std::size_t step = 1; step < base.prob_matrix.size(); ++step)
        if (base.prob_matrix[step][column] > base.prob_matrix[best][column]) best = step;

    std::vector<TokenId> spliced(base.tokens.begin(),
                                 base.tokens.begin() + static_cast<long>(best));
    spliced.insert(spliced.end(), kw_ids.begin(), kw_ids.end());

    DecodeParams cont = params;
    cont.seed = derive_seed(params.seed, "gen2-cont", 0);

    CandidateResponse cand;
    cand.tokens = continue_decode(lm, garbled.conv, spliced, cont);
    cand.method = GenMethod::gen2_insert;
    cand.garble = garbled.provenance;
    cand.keyword = keyword;
    cand.insert_step = best;
    cand.sub_seed = params.seed;

    if (trace) {
        trace->base = std::move(base);
        trace->insert_step = best;
    }
    return cand;
}

CandidateResponse gen2_start(const LanguageModel& lm, const GarbledConversation& garbled,
                             const KeywordCandidate& keyword, const DecodeParams& params) {
    require_strategy(garbled, GarbleStrategy::context_destruction);
    auto kw_ids = keyword_ids(lm, keyword);

    CandidateResponse cand;
    cand.tokens = continue_decode(lm, garbled.conv, kw_ids, params);
    cand.method = GenMethod::gen2_start;
    cand.garble = garbled.provenance;
    cand.keyword = keyword;
    cand.sub_seed = params.seed;
    return cand;
}

std::vector<CandidateResponse> generate_batch(const LanguageModel& lm, const Conversation& conv,
                                              const UtterancePool& pool, const IdfTable& idf,
                                              const StopwordSet& stopwords, const GenConfig& cfg) {
    validate(cfg.decode);
    bool garbling = cfg.garble_histories;
    bool flow_ok = !garbling || can_flow_distort(conv);
    bool destroy_ok = !garbling || can_context_destroy(conv, pool);
    if (!flow_ok) return {}; // destruction needs N >= 3, so nothing applies either

    auto keywords = extract_keywords(conv, idf, cfg.keyword_top_k, stopwords, lm.tokenizer().mode());
    std::erase_if(keywords, [&](const KeywordCandidate& kw) {
        for (const auto& tok : kw.tokens)
            if (!lm.vocab().contains(tok)) return true;
        return false;
    });

    std::size_t n_gen1 = cfg.n_gen1;
    std::size_t n_gen2 = cfg.n_gen2;
    if (keywords.empty() || !destroy_ok) {
        if (cfg.allow_gen1_fallback) n_gen1 += n_gen2;
        n_gen2 = 0;
    }

    auto make = [&](std::size_t slot, std::uint64_t sub_seed) -> CandidateResponse {
        Rng garble_rng(derive_seed(sub_seed, "garble", 0));
        DecodeParams params = cfg.decode;
        params.seed = derive_seed(sub_seed, "decode", 0);

        if (slot < n_gen1) {
            auto garbled = garbling ? flow_distortion(conv, garble_rng) : passthrough(conv);
            auto cand = gen1(lm, garbled, params);
            cand.sub_seed = sub_seed;
            return cand;
        }
        std::size_t j = slot - n_gen1;
        const KeywordCandidate& kw = keywords[j % keywords.size()];
        auto garbled = garbling ? context_destruction(conv, pool, garble_rng) : passthrough(conv);
        auto cand = j % 2 == 0 ? gen2_insert(lm, garbled, kw, params)
                               : gen2_start(lm, garbled, kw, params);
        cand.sub_seed = sub_seed;
        return cand;
    };

    std::vector<CandidateResponse> batch;
    batch.reserve(n_gen1 + n_gen2);
    for (std::size_t slot = 0; slot < n_gen1 + n_gen2; ++slot) {
        std::uint64_t sub_seed = derive_seed(cfg.master_seed, conv.id, slot);
        CandidateResponse cand = make(slot, sub_seed);
        if (cand.tokens.empty()) {
            // bounded recovery: one retry on a bumped seed, then drop
            cand = make(slot, derive_seed(sub_seed, "retry", 1));
            if (cand.tokens.empty()) continue;
        }
        batch.push_back(std::move(cand));
    }
    return batch;
}

} // namespace hardneg
