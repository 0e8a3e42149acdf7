#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "hardneg/gen.hpp"
#include "hardneg/ngram_lm.hpp"
#include "support/synthetic.hpp"

using namespace hardneg;
using hardneg::testing::ScriptedLm;
using hardneg::testing::make_vocab;

namespace {

Conversation conv_of(const std::vector<std::string>& turns, const std::string& id = "c0") {
    Conversation c;
    c.id = id;
    for (const auto& t : turns) c.turns.push_back({t, {}});
    return c;
}

GarbledConversation destroyed(const Conversation& conv) {
    GarbledConversation g{conv, {}};
    g.provenance.strategy = GarbleStrategy::context_destruction;
    return g;
}

GarbledConversation distorted(const Conversation& conv) {
    GarbledConversation g{conv, {}};
    g.provenance.strategy = GarbleStrategy::flow_distortion;
    g.provenance.swap_index = 0;
    return g;
}

ProbDist normalized(ProbDist d) {
    double sum = std::accumulate(d.begin(), d.end(), 0.0);
    for (auto& x : d) x /= sum;
    return d;
}

// Distribution that pushes `winner` to ~main mass and the keyword column to
// exactly `kw_mass` (pre-normalization weights chosen so ratios survive).
ProbDist step_dist(std::size_t v, TokenId winner, TokenId kw, double kw_mass) {
    ProbDist d(v, 0.005);
    d[static_cast<std::size_t>(kw)] = kw_mass;
    d[static_cast<std::size_t>(winner)] = 1.0;
    return normalized(d);
}

bool contains_subsequence(const std::vector<TokenId>& hay, const std::vector<TokenId>& needle) {
    if (needle.empty() || hay.size() < needle.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i)
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<long>(i)))
            return true;
    return false;
}

} // namespace

TEST_CASE("gen1 is plain decoding from the distorted history") {
    auto vocab = make_vocab(8);
    ScriptedLm lm(vocab);
    ProbDist peaked(vocab->size(), 0.01);
    peaked[6] = 1.0;
    lm.set_default(normalized(peaked));

    Conversation conv = conv_of({"w0 w1", "w2"});
    auto garbled = distorted(conv);
    DecodeParams params{0.3, 4, 1, 11};
    CandidateResponse cand = gen1(lm, garbled, params);
    DecodeOutput direct = decode(lm, garbled.conv, params);

    CHECK(cand.method == GenMethod::gen1);
    CHECK(cand.tokens == direct.tokens);
    CHECK(cand.garble.strategy == GarbleStrategy::flow_distortion);
    CHECK(!cand.keyword.has_value());

    SUBCASE("fixed seed reproduces the candidate") {
        CandidateResponse again = gen1(lm, garbled, params);
        CHECK(again.tokens == cand.tokens);
    }

    SUBCASE("wrong strategy is rejected") {
        CHECK_THROWS(gen1(lm, destroyed(conv), params));
    }
}

TEST_CASE("gen1 output actually depends on the garbling") {
    // trained continuations are keyed by the last turn, so swapping the final
    // turn must change the greedy decode; the single-turn dialogues weight
    // the response transition above the mid-history one
    Dataset ds;
    auto add = [&](const std::vector<std::string>& turns, const std::string& resp) {
        Example ex;
        ex.context.id = "train:" + std::to_string(ds.examples.size() + 1);
        for (const auto& t : turns) ex.context.turns.push_back({t, {}});
        ex.response = {resp, {}};
        ex.label = Label::positive;
        ds.examples.push_back(ex);
    };
    add({"s1", "s2"}, "r12");
    add({"s2", "s1"}, "r21");
    add({"s2"}, "r12");
    add({"s1"}, "r21");
    NGramLM lm = NGramLM::train(ds, 3);

    Conversation conv = conv_of({"s1", "s2"});
    DecodeParams params{0.2, 3, 1, 5};
    DecodeOutput original = decode(lm, conv, params);

    GarbledConversation swapped{conv, {}};
    swapped.provenance.strategy = GarbleStrategy::flow_distortion;
    swapped.provenance.swap_index = 0;
    std::swap(swapped.conv.turns[0], swapped.conv.turns[1]);
    CandidateResponse cand = gen1(lm, swapped, params);

    REQUIRE(!original.tokens.empty());
    REQUIRE(!cand.tokens.empty());
    CHECK(original.tokens[0] == lm.vocab().id_of("r12"));
    CHECK(cand.tokens[0] == lm.vocab().id_of("r21"));
}

TEST_CASE("gen2-insert splices the keyword at the argmax step") {
    auto vocab = make_vocab(10);
    TokenId kw_id = vocab->id_of("w9");
    REQUIRE(kw_id == 13);
    ScriptedLm lm(vocab);

    Conversation conv = conv_of({"w0 w1", "w2", "w3"});
    std::size_t base = encode_history(lm, conv).size();

    // keyword column over the three decode steps: 0.1, 0.7, 0.2
    lm.set_for_length(base + 0, step_dist(vocab->size(), 4, kw_id, 0.1));
    lm.set_for_length(base + 1, step_dist(vocab->size(), 5, kw_id, 0.7));
    lm.set_for_length(base + 2, step_dist(vocab->size(), 6, kw_id, 0.2));
    ProbDist eos(vocab->size(), 0.002);
    eos[static_cast<std::size_t>(Vocab::kEos)] = 1.0;
    lm.set_for_length(base + 3, normalized(eos));

    KeywordCandidate kw{{"w9"}, 1.0, 0};
    DecodeParams params{0.5, 3, 1, 21};

    Gen2Trace trace;
    CandidateResponse cand = gen2_insert(lm, destroyed(conv), kw, params, &trace);

    CHECK(cand.method == GenMethod::gen2_insert);
    REQUIRE(cand.insert_step.has_value());
    CHECK(*cand.insert_step == 1); // 0.7 beats 0.1 and 0.2
    CHECK(trace.insert_step == 1);
    REQUIRE(trace.base.prob_matrix.size() == 3);
    CHECK(trace.base.prob_matrix[1][static_cast<std::size_t>(kw_id)] >
          trace.base.prob_matrix[0][static_cast<std::size_t>(kw_id)]);

    // spliced response: r_0, keyword, then the continuation
    REQUIRE(cand.tokens.size() >= 2);
    CHECK(cand.tokens[0] == trace.base.tokens[0]);
    CHECK(cand.tokens[1] == kw_id);
    CHECK(contains_subsequence(cand.tokens, {kw_id}));

    SUBCASE("ties resolve to the earliest step") {
        lm.set_for_length(base + 0, step_dist(vocab->size(), 4, kw_id, 0.7));
        Gen2Trace t2;
        CandidateResponse c2 = gen2_insert(lm, destroyed(conv), kw, params, &t2);
        CHECK(*c2.insert_step == 0);
        CHECK(c2.tokens[0] == kw_id); // boundary step: response starts with the keyword
    }
}

TEST_CASE("gen2-insert argmax agrees with a scan of the recorded matrix") {
    hardneg::testing::SyntheticSpec spec;
    spec.n_dialogues = 20;
    Dataset ds = hardneg::testing::make_topical_corpus(spec);
    NGramLM lm = NGramLM::train(ds, 3);
    IdfTable idf = build_idf(ds, TokenizerMode::whitespace);
    UtterancePool pool(ds);

    std::size_t runs = 0;
    Rng rng(31);
    while (runs < 200) {
        const auto& ex = ds.examples[rng.uniform_index(ds.examples.size())];
        if (ex.context.turns.size() < 3) continue;
        auto kws = extract_keywords(ex.context, idf, 3, {}, TokenizerMode::whitespace);
        if (kws.empty()) continue;

        Rng grng(rng.next());
        auto garbled = context_destruction(ex.context, pool, grng);
        DecodeParams params{0.9, 10, 2, rng.next()};

        Gen2Trace trace;
        CandidateResponse cand = gen2_insert(lm, garbled, kws[0], params, &trace);

        auto col = static_cast<std::size_t>(lm.vocab().id_of(kws[0].tokens[0]));
        std::size_t want = 0;
        for (std::size_t s = 1; s < trace.base.prob_matrix.size(); ++s)
            if (trace.base.prob_matrix[s][col] > trace.base.prob_matrix[want][col]) want = s;
        CHECK(*cand.insert_step == want);
        // no step strictly beats the recorded one
        for (std::size_t s = 0; s < trace.base.prob_matrix.size(); ++s)
            CHECK(trace.base.prob_matrix[s][col] <=
                  trace.base.prob_matrix[*cand.insert_step][col]);

        std::vector<TokenId> kw_ids;
        for (const auto& t : kws[0].tokens) kw_ids.push_back(lm.vocab().id_of(t));
        CHECK(contains_subsequence(cand.tokens, kw_ids));
        ++runs;
    }
}

TEST_CASE("gen2-start forces the keyword prefix") {
    hardneg::testing::SyntheticSpec spec;
    spec.n_dialogues = 10;
    Dataset ds = hardneg::testing::make_topical_corpus(spec);
    NGramLM lm = NGramLM::train(ds, 3);
    UtterancePool pool(ds);
    IdfTable idf = build_idf(ds, TokenizerMode::whitespace);

    const auto& ex = ds.examples[0];
    REQUIRE(ex.context.turns.size() >= 3);
    auto kws = extract_keywords(ex.context, idf, 10, {}, TokenizerMode::whitespace);
    REQUIRE(kws.size() >= 2);
    // pick a second keyword whose first token differs from the first one's
    std::size_t second = 0;
    for (std::size_t i = 1; i < kws.size(); ++i)
        if (kws[i].tokens[0] != kws[0].tokens[0]) {
            second = i;
            break;
        }
    REQUIRE(second != 0);

    Rng grng(4);
    auto garbled = context_destruction(ex.context, pool, grng);
    DecodeParams params{0.9, 12, 2, 17};

    CandidateResponse a = gen2_start(lm, garbled, kws[0], params);
    CHECK(a.method == GenMethod::gen2_start);
    std::vector<TokenId> kw_ids;
    for (const auto& t : kws[0].tokens) kw_ids.push_back(lm.vocab().id_of(t));
    REQUIRE(a.tokens.size() >= kw_ids.size());
    for (std::size_t i = 0; i < kw_ids.size(); ++i) CHECK(a.tokens[i] == kw_ids[i]);

    // different keyword, different prefix
    CandidateResponse b = gen2_start(lm, garbled, kws[second], params);
    CHECK(b.tokens[0] == lm.vocab().id_of(kws[second].tokens[0]));
    CHECK(a.tokens[0] != b.tokens[0]);
}

TEST_CASE("generate_batch: composition, fallbacks, determinism") {
    hardneg::testing::SyntheticSpec spec;
    spec.n_dialogues = 16;
    Dataset ds = hardneg::testing::make_topical_corpus(spec);
    NGramLM lm = NGramLM::train(ds, 3);
    IdfTable idf = build_idf(ds, TokenizerMode::whitespace);
    UtterancePool pool(ds);

    GenConfig cfg;
    cfg.master_seed = 2024;
    cfg.decode = {0.9, 10, 2, 0};

    SUBCASE("default shape: gen1, gen1, gen2-insert, gen2-start") {
        const auto& conv = ds.examples[0].context;
        auto batch = generate_batch(lm, conv, pool, idf, {}, cfg);
        REQUIRE(batch.size() == 4);
        CHECK(batch[0].method == GenMethod::gen1);
        CHECK(batch[1].method == GenMethod::gen1);
        CHECK(batch[2].method == GenMethod::gen2_insert);
        CHECK(batch[3].method == GenMethod::gen2_start);
        for (const auto& cand : batch) {
            if (cand.method == GenMethod::gen1)
                CHECK(cand.garble.strategy == GarbleStrategy::flow_distortion);
            else
                CHECK(cand.garble.strategy == GarbleStrategy::context_destruction);
        }
        // distinct sub-seeds, fresh garbles
        CHECK(batch[0].sub_seed != batch[1].sub_seed);
        CHECK(batch[2].keyword.has_value());
        CHECK(batch[3].keyword.has_value());
    }

    SUBCASE("no keywords: every slot becomes gen1") {
        // a conversation of pure stopwords yields no keywords
        StopwordSet all_stop;
        for (const auto& turn : ds.examples[0].context.turns)
            for (const auto& tok : Tokenizer::split(TokenizerMode::whitespace, turn.text))
                all_stop.insert(tok);
        auto batch = generate_batch(lm, ds.examples[0].context, pool, idf, all_stop, cfg);
        REQUIRE(batch.size() == 4);
        for (const auto& cand : batch) CHECK(cand.method == GenMethod::gen1);
    }

    SUBCASE("two-turn conversations cannot be destroyed: all gen1") {
        Conversation conv = conv_of({"t0w0 t0w1", "t0w2"}, "short");
        auto batch = generate_batch(lm, conv, pool, idf, {}, cfg);
        REQUIRE(batch.size() == 4);
        for (const auto& cand : batch) CHECK(cand.method == GenMethod::gen1);
    }

    SUBCASE("single-turn conversations produce an empty batch") {
        Conversation conv = conv_of({"t0w0 t0w1"}, "tiny");
        CHECK(generate_batch(lm, conv, pool, idf, {}, cfg).empty());
    }

    SUBCASE("gen1 fallback disabled leaves gen2-less conversations empty") {
        GenConfig strict = cfg;
        strict.n_gen1 = 0;
        strict.allow_gen1_fallback = false;
        Conversation conv = conv_of({"t0w0 t0w1", "t0w2"}, "short");
        CHECK(generate_batch(lm, conv, pool, idf, {}, strict).empty());
        // eligible conversations still get their gen2 slots
        auto batch = generate_batch(lm, ds.examples[0].context, pool, idf, {}, strict);
        REQUIRE(batch.size() == 2);
        CHECK(batch[0].method == GenMethod::gen2_insert);
        CHECK(batch[1].method == GenMethod::gen2_start);
    }

    SUBCASE("fixed master seed reproduces the batch bit for bit") {
        const auto& conv = ds.examples[4].context;
        auto b1 = generate_batch(lm, conv, pool, idf, {}, cfg);
        auto b2 = generate_batch(lm, conv, pool, idf, {}, cfg);
        REQUIRE(b1.size() == b2.size());
        for (std::size_t i = 0; i < b1.size(); ++i) {
            CHECK(b1[i].tokens == b2[i].tokens);
            CHECK(b1[i].sub_seed == b2[i].sub_seed);
            CHECK(b1[i].method == b2[i].method);
        }
        GenConfig other = cfg;
        other.master_seed = 2025;
        auto b3 = generate_batch(lm, conv, pool, idf, {}, other);
        bool any_diff = false;
        for (std::size_t i = 0; i < std::min(b1.size(), b3.size()); ++i)
            any_diff |= b1[i].tokens != b3[i].tokens;
        CHECK(any_diff);
    }

    SUBCASE("keyword containment holds across the batch") {
        Rng rng(6);
        for (int run = 0; run < 100; ++run) {
            GenConfig c2 = cfg;
            c2.master_seed = rng.next();
            const auto& conv = ds.examples[rng.uniform_index(ds.examples.size())].context;
            for (const auto& cand : generate_batch(lm, conv, pool, idf, {}, c2)) {
                if (!cand.keyword) continue;
                std::vector<TokenId> kw_ids;
                for (const auto& t : cand.keyword->tokens)
                    kw_ids.push_back(lm.vocab().id_of(t));
                CHECK(contains_subsequence(cand.tokens, kw_ids));
            }
        }
    }

    SUBCASE("no-garble keeps the original history and tags strategy none") {
        GenConfig raw = cfg;
        raw.garble_histories = false;
        auto batch = generate_batch(lm, ds.examples[0].context, pool, idf, {}, raw);
        REQUIRE(batch.size() == 4);
        for (const auto& cand : batch) CHECK(cand.garble.strategy == GarbleStrategy::none);
    }
}
