#include "doctest.h"

#include <algorithm>
#include <set>

#include "hardneg/errors.hpp"
#include "hardneg/garble.hpp"
#include "support/synthetic.hpp"

using namespace hardneg;

namespace {

Conversation conv_of(const std::vector<std::string>& turns, const std::string& id = "c0") {
    Conversation c;
    c.id = id;
    for (const auto& t : turns) c.turns.push_back({t, {}});
    return c;
}

std::multiset<std::string> turn_multiset(const Conversation& c) {
    std::multiset<std::string> out;
    for (const auto& t : c.turns) out.insert(t.text);
    return out;
}

} // namespace

TEST_CASE("flow distortion: swap semantics") {
    SUBCASE("two turns force the only swap") {
        Rng rng(1);
        auto g = flow_distortion(conv_of({"a", "b"}), rng);
        REQUIRE(g.conv.turns.size() == 2);
        CHECK(g.conv.turns[0].text == "b");
        CHECK(g.conv.turns[1].text == "a");
        CHECK(g.provenance.strategy == GarbleStrategy::flow_distortion);
        CHECK(g.provenance.swap_index == 0);
    }

    SUBCASE("seeded trace: recorded index matches the moved turns") {
        Rng rng(20250809);
        Conversation conv = conv_of({"a", "b", "c", "d", "e"});
        auto g = flow_distortion(conv, rng);
        std::size_t i = *g.provenance.swap_index;
        CHECK(i < 4);
        CHECK(g.conv.turns[i].text == "e");
        CHECK(g.conv.turns[4].text == conv.turns[i].text);
    }

    SUBCASE("single turn cannot be distorted") {
        Rng rng(1);
        CHECK_THROWS_AS(flow_distortion(conv_of({"only"}), rng), NotGarblableError);
    }

    SUBCASE("re-applying the recorded swap is an involution") {
        Rng rng(7);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<std::string> turns;
            std::size_t n = 2 + rng.uniform_index(6);
            for (std::size_t t = 0; t < n; ++t) turns.push_back("u" + std::to_string(t));
            Conversation conv = conv_of(turns);
            auto g = flow_distortion(conv, rng);
            Conversation undone = g.conv;
            std::swap(undone.turns[*g.provenance.swap_index], undone.turns[n - 1]);
            for (std::size_t t = 0; t < n; ++t)
                CHECK(undone.turns[t].text == conv.turns[t].text);
        }
    }

    SUBCASE("1e3 random conversations: multiset preserved, exactly {i, N-1} changed") {
        Rng rng(99);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<std::string> turns;
            std::size_t n = 2 + rng.uniform_index(7);
            for (std::size_t t = 0; t < n; ++t)
                turns.push_back("u" + std::to_string(rng.uniform_index(1000)) + "-" +
                                std::to_string(t)); // distinct texts
            Conversation conv = conv_of(turns);
            auto g = flow_distortion(conv, rng);
            CHECK(turn_multiset(conv) == turn_multiset(g.conv));
            std::size_t i = *g.provenance.swap_index;
            for (std::size_t t = 0; t < n; ++t) {
                bool changed = g.conv.turns[t].text != conv.turns[t].text;
                if (t == i || t == n - 1)
                    CHECK(changed);
                else
                    CHECK(!changed);
            }
        }
    }

    SUBCASE("equal texts trigger one resample then proceed") {
        // all turns identical: any swap is textually a no-op and gets flagged
        Rng rng(3);
        auto g = flow_distortion(conv_of({"same", "same", "same"}), rng);
        CHECK(g.provenance.swap_noop);
        CHECK(turn_multiset(g.conv) == std::multiset<std::string>{"same", "same", "same"});
    }

    SUBCASE("deterministic given seed") {
        Conversation conv = conv_of({"a", "b", "c", "d"});
        Rng r1(42), r2(42);
        auto g1 = flow_distortion(conv, r1);
        auto g2 = flow_distortion(conv, r2);
        CHECK(g1.provenance.swap_index == g2.provenance.swap_index);
        for (std::size_t t = 0; t < 4; ++t)
            CHECK(g1.conv.turns[t].text == g2.conv.turns[t].text);
    }
}

TEST_CASE("context destruction: replacement semantics") {
    hardneg::testing::SyntheticSpec spec;
    spec.n_dialogues = 12;
    Dataset ds = hardneg::testing::make_topical_corpus(spec);
    UtterancePool pool(ds);

    SUBCASE("N=3 forces r=2, first turn untouched") {
        Conversation conv = conv_of({"keep me", "x1", "x2"}, "mine");
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng rng(seed);
            auto g = context_destruction(conv, pool, rng);
            REQUIRE(g.conv.turns.size() == 3);
            CHECK(g.conv.turns[0].text == "keep me");
            CHECK(g.provenance.replaced.size() == 2);
            CHECK(g.provenance.replaced[0].turn_index == 1);
            CHECK(g.provenance.replaced[1].turn_index == 2);
        }
    }

    SUBCASE("N=4 seeded trace: prefix turns unchanged, tail replaced") {
        Conversation conv = conv_of({"p0", "p1", "p2", "p3"}, "mine");
        Rng rng(8);
        auto g = context_destruction(conv, pool, rng);
        std::size_t r = g.provenance.replaced.size();
        REQUIRE((r == 2 || r == 3));
        for (std::size_t t = 0; t < 4 - r; ++t) CHECK(g.conv.turns[t].text == conv.turns[t].text);
        for (std::size_t t = 4 - r; t < 4; ++t) CHECK(g.conv.turns[t].text != conv.turns[t].text);
    }

    SUBCASE("too short or empty pool") {
        Rng rng(1);
        CHECK_THROWS_AS(context_destruction(conv_of({"a", "b"}), pool, rng), NotGarblableError);

        Dataset solo;
        solo.examples.push_back(ds.examples[0]);
        UtterancePool solo_pool(solo);
        Conversation conv = ds.examples[0].context;
        CHECK_THROWS_AS(context_destruction(conv, solo_pool, rng), NoCandidateError);
    }

    SUBCASE("1e4 seeded runs: replacements never come from the conversation itself") {
        Rng rng(5);
        for (int run = 0; run < 10000; ++run) {
            const Conversation& conv = ds.examples[rng.uniform_index(ds.examples.size())].context;
            if (conv.turns.size() < 3) continue;
            auto g = context_destruction(conv, pool, rng);
            std::size_t n = conv.turns.size();
            std::size_t r = g.provenance.replaced.size();
            REQUIRE((r == 2 || (r == 3 && n > 3)));
            for (std::size_t t = 0; t < n - r; ++t)
                CHECK(g.conv.turns[t].text == conv.turns[t].text);
            for (const auto& rep : g.provenance.replaced) CHECK(rep.source_conv_id != conv.id);
            CHECK(g.conv.turns.size() == n);
        }
    }

    SUBCASE("deterministic given seed") {
        const Conversation& conv = ds.examples[2].context;
        Rng r1(77), r2(77);
        auto g1 = context_destruction(conv, pool, r1);
        auto g2 = context_destruction(conv, pool, r2);
        REQUIRE(g1.conv.turns.size() == g2.conv.turns.size());
        for (std::size_t t = 0; t < g1.conv.turns.size(); ++t)
            CHECK(g1.conv.turns[t].text == g2.conv.turns[t].text);
    }
}

TEST_CASE("eligibility helpers and passthrough") {
    hardneg::testing::SyntheticSpec spec;
    spec.n_dialogues = 4;
    Dataset ds = hardneg::testing::make_topical_corpus(spec);
    UtterancePool pool(ds);

    CHECK(!can_flow_distort(conv_of({"one"})));
    CHECK(can_flow_distort(conv_of({"one", "two"})));
    CHECK(!can_context_destroy(conv_of({"one", "two"}, "x"), pool));
    CHECK(can_context_destroy(conv_of({"one", "two", "three"}, "x"), pool));

    auto g = passthrough(conv_of({"a", "b"}));
    CHECK(g.provenance.strategy == GarbleStrategy::none);
    CHECK(g.conv.turns[0].text == "a");
}
