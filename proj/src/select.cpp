#include "hardneg/select.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "hardneg/errors.hpp"

namespace hardneg {

ThresholdSpec ThresholdSpec::parse(const std::string& text) {
    if (text.empty()) throw ConfigError("empty threshold spec");
    ThresholdSpec spec;
    std::size_t pos = 0;
    try {
        if (text[0] == 'q') {
            spec.kind = Kind::quantile;
            spec.value = std::stod(text.substr(1), &pos);
            pos += 1;
        } else {
            spec.kind = Kind::absolute;
            spec.value = std::stod(text, &pos);
        }
    } catch (const std::exception&) {
        throw ConfigError("bad threshold spec \"" + text + "\" (want a number or qX)");
    }
    if (pos != text.size()) throw ConfigError("bad threshold spec \"" + text + "\"");
    if (spec.kind == Kind::quantile && (spec.value < 0.0 || spec.value > 1.0))
        throw ConfigError("quantile must be in [0, 1]");
    if (spec.kind == Kind::absolute && spec.value <= 0.0)
        throw ConfigError("absolute threshold must be > 0");
    return spec;
}

std::string ThresholdSpec::to_string() const {
    return kind == Kind::quantile ? "q" + std::to_string(value) : std::to_string(value);
}

std::vector<ScoredCandidate> score_candidates(const LanguageModel& lm,
                                              const Conversation& original,
                                              std::vector<CandidateResponse> candidates) {
    if (candidates.empty()) throw std::invalid_argument("score_candidates: empty batch");
    std::vector<ScoredCandidate> out;
    out.reserve(candidates.size());
    for (auto& cand : candidates) {
        double ppl = perplexity(score_sequence(lm, original, cand.tokens));
        out.push_back({std::move(cand), ppl});
    }
    return out;
}

namespace {

// Linear-interpolation quantile over a sorted sample.
double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    double h = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

Utterance detokenize(const LanguageModel& lm, const std::vector<TokenId>& tokens) {
    return {lm.tokenizer().decode(tokens), tokens};
}

Origin origin_of(GenMethod m) {
    switch (m) {
        case GenMethod::gen1: return Origin::generated_gen1;
        case GenMethod::gen2_insert: return Origin::generated_gen2_insert;
        case GenMethod::gen2_start: return Origin::generated_gen2_start;
    }
    return Origin::generated_gen1;
}

} // namespace

double resolve_threshold(const ThresholdSpec& spec, const LanguageModel& lm,
                         const Dataset& sample, std::size_t max_contexts) {
    if (spec.kind == ThresholdSpec::Kind::absolute) return spec.value;

    std::vector<double> ppls;
    for (const auto& ex : sample.examples) {
        if (ex.label != Label::positive) continue;
        auto tokens = lm.tokenizer().encode(ex.response.text);
        if (tokens.empty()) continue;
        ppls.push_back(perplexity(score_sequence(lm, ex.context, tokens)));
        if (ppls.size() >= max_contexts) break;
    }
    if (ppls.empty())
        throw std::invalid_argument("quantile threshold needs a sample with golden responses");
    return quantile(std::move(ppls), spec.value);
}

SelectionResult select_negative(const LanguageModel& lm, std::vector<ScoredCandidate> scored,
                                double threshold, const UtterancePool& pool,
                                const std::string& exclude_conv_id, Rng& rng) {
    SelectionResult res;
    res.batch = std::move(scored);

    std::size_t best = 0;
    bool have_best = false;
    for (std::size_t i = 0; i < res.batch.size(); ++i)
        if (!have_best || res.batch[i].ppl > res.batch[best].ppl) {
            best = i;
            have_best = true;
        }

    if (have_best && res.batch[best].ppl >= threshold) {
        res.response = detokenize(lm, res.batch[best].candidate.tokens);
        res.origin = origin_of(res.batch[best].candidate.method);
        res.chosen_ppl = res.batch[best].ppl;
        res.chosen_index = best;
        return res;
    }

    res.response = sample_utterance(pool, rng, exclude_conv_id);
    res.origin = Origin::fallback_random;
    return res;
}

SelectionResult select_random(const LanguageModel& lm, std::vector<ScoredCandidate> scored,
                              const UtterancePool& pool, const std::string& exclude_conv_id,
                              Rng& rng) {
    SelectionResult res;
    res.batch = std::move(scored);
    if (res.batch.empty()) {
        res.response = sample_utterance(pool, rng, exclude_conv_id);
        res.origin = Origin::fallback_random;
        return res;
    }
    std::size_t pick = rng.uniform_index(res.batch.size());
    res.response = detokenize(lm, res.batch[pick].candidate.tokens);
    res.origin = origin_of(res.batch[pick].candidate.method);
    res.chosen_ppl = res.batch[pick].ppl;
    res.chosen_index = pick;
    return res;
}

namespace {

struct ContextGroup {
    std::size_t positive = 0; // indices into train.examples
    std::size_t negative = 0;
    std::size_t n_pos = 0, n_neg = 0;
};

std::string context_key(const Conversation& conv) {
    std::string key;
    for (const auto& turn : conv.turns) {
        key += turn.text;
        key += '\x1f';
    }
    return key;
}

} // namespace

AugmentResult augment_dataset(const Dataset& train, const LanguageModel& lm, const Dataset& pool,
                              const IdfTable& idf, const StopwordSet& stopwords,
                              const AugmentConfig& cfg, const Dataset* threshold_sample) {
    // Group the 1:1 training rows by context content; the golden and random
    // rows of one context carry different line-derived ids.
    std::unordered_map<std::string, std::size_t> index;
    std::vector<ContextGroup> groups; // first-occurrence order
    for (std::size_t i = 0; i < train.examples.size(); ++i) {
        const Example& ex = train.examples[i];
        auto [it, inserted] = index.emplace(context_key(ex.context), groups.size());
        if (inserted) groups.emplace_back();
        ContextGroup& g = groups[it->second];
        if (ex.label == Label::positive) {
            g.positive = i;
            g.n_pos += 1;
        } else {
            g.negative = i;
            g.n_neg += 1;
        }
    }
    for (const auto& g : groups)
        if (g.n_pos != 1 || g.n_neg != 1)
            throw std::invalid_argument(
                "augment_dataset expects exactly one positive and one negative per context "
                "(1:1 layout); context of " +
                train.examples[g.n_pos > 0 ? g.positive : g.negative].context.id + " has " +
                std::to_string(g.n_pos) + " positive / " + std::to_string(g.n_neg) + " negative");

    UtterancePool upool(pool);

    double threshold = 0.0;
    if (!cfg.no_filter && !cfg.random_da) {
        threshold = cfg.resolved_threshold
                        ? *cfg.resolved_threshold
                        : resolve_threshold(cfg.threshold, lm,
                                            threshold_sample ? *threshold_sample : train);
    }

    GenConfig gen_cfg = cfg.gen;
    gen_cfg.master_seed = cfg.master_seed;

    std::vector<AuditRecord> audit(groups.size());
    auto process = [&](std::size_t gi) {
        const ContextGroup& g = groups[gi];
        const Conversation& conv = train.examples[g.positive].context;
        AuditRecord& rec = audit[gi];
        rec.conv_id = conv.id;
        rec.threshold = threshold;
        for (const auto& turn : conv.turns) rec.context_turns.push_back(turn.text);

        Rng select_rng(derive_seed(cfg.master_seed, conv.id, 0xfa11bacc));

        if (cfg.random_da) {
            rec.origin = Origin::random;
            rec.response_text = sample_utterance(upool, select_rng, conv.id).text;
            return;
        }

        auto batch = generate_batch(lm, conv, upool, idf, stopwords, gen_cfg);
        std::vector<ScoredCandidate> scored;
        if (!batch.empty()) scored = score_candidates(lm, conv, std::move(batch));

        SelectionResult sel =
            cfg.no_filter ? select_random(lm, std::move(scored), upool, conv.id, select_rng)
                          : select_negative(lm, std::move(scored), threshold, upool, conv.id,
                                            select_rng);
        rec.batch = std::move(sel.batch);
        rec.chosen_index = sel.chosen_index;
        rec.origin = sel.origin;
        rec.response_text = sel.response.text;
    };

    std::size_t workers = std::max<std::size_t>(1, cfg.workers);
    if (workers == 1) {
        for (std::size_t gi = 0; gi < groups.size(); ++gi) process(gi);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            threads.emplace_back([&] {
                for (std::size_t gi = next.fetch_add(1); gi < groups.size();
                     gi = next.fetch_add(1))
                    process(gi);
            });
        for (auto& t : threads) t.join();
    }

    AugmentResult result;
    result.resolved_threshold = threshold;
    result.dataset.split = train.split;
    result.dataset.examples.reserve(train.examples.size() + groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const ContextGroup& g = groups[gi];
        result.dataset.examples.push_back(train.examples[g.positive]);
        result.dataset.examples.push_back(train.examples[g.negative]);

        Example added;
        added.context = train.examples[g.positive].context;
        added.response = {audit[gi].response_text, {}};
        added.label = Label::negative;
        added.origin = audit[gi].origin;
        result.dataset.examples.push_back(std::move(added));
    }
    result.audit = std::move(audit);
    return result;
}

} // namespace hardneg
