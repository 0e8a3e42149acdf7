#include "doctest.h"

#include <cmath>
#include <fstream>

#include "hardneg/errors.hpp"
#include "hardneg/extern_lm.hpp"
#include "support/synthetic.hpp"

using namespace hardneg;
using hardneg::testing::TempDir;
using hardneg::testing::make_vocab;

namespace {

std::string write_script(const TempDir& tmp, const std::string& name, const std::string& body) {
    auto path = tmp.path(name);
    std::ofstream out(path);
    out << body;
    return path;
}

const char* kUniformServer = R"PY(
import math, sys
v = int(sys.argv[1])
for line in sys.stdin:
    parts = line.split()
    if not parts:
        continue
    if parts[0] == 'DIST':
        print(' '.join(['%.17g' % (1.0 / v)] * v), flush=True)
    elif parts[0] == 'SCORE':
        k = len(parts) - parts.index('|') - 1
        print(' '.join(['%.17g' % math.log(1.0 / v)] * k), flush=True)
)PY";

} // namespace

TEST_CASE("external adapter speaks the line protocol") {
    TempDir tmp;
    auto vocab = make_vocab(6); // V = 10
    auto script = write_script(tmp, "uniform.py", kUniformServer);
    ExternalLm lm("python3 " + script + " 10", vocab, TokenizerMode::whitespace, 5000);

    SUBCASE("DIST returns a full distribution") {
        ProbDist dist = lm.next_token_dist(std::vector<TokenId>{4, 5});
        REQUIRE(dist.size() == 10);
        for (double p : dist) CHECK(p == doctest::Approx(0.1));
    }

    SUBCASE("SCORE returns per-token log-probs; Eq-style scoring works on top") {
        Conversation conv;
        conv.id = "c";
        conv.turns.push_back({"w0 w1", {}});
        std::vector<TokenId> resp{4, 5, 6};
        SequenceScore s = score_sequence(lm, conv, resp);
        CHECK(s.token_log_probs.size() == 3);
        CHECK(s.log_prob == doctest::Approx(3.0 * std::log(0.1)).epsilon(1e-12));
        CHECK(perplexity(s) == doctest::Approx(10.0).epsilon(1e-9));
    }

    SUBCASE("decode runs against the external backend") {
        Conversation conv;
        conv.id = "c";
        conv.turns.push_back({"w0", {}});
        DecodeOutput out = decode(lm, conv, DecodeParams{0.9, 5, 2, 3});
        CHECK(!out.tokens.empty());
        CHECK(out.tokens.size() == out.prob_matrix.size());
    }
}

TEST_CASE("malformed replies raise protocol errors, not timeouts") {
    TempDir tmp;
    auto vocab = make_vocab(6);

    SUBCASE("wrong arity") {
        auto script = write_script(tmp, "short.py", R"PY(
import sys
for line in sys.stdin:
    print('0.5 0.5', flush=True)
)PY");
        ExternalLm lm("python3 " + script, vocab, TokenizerMode::whitespace, 5000);
        CHECK_THROWS_AS(lm.next_token_dist(std::vector<TokenId>{4}), LmProtocolError);
    }

    SUBCASE("garbage text") {
        auto script = write_script(tmp, "garbage.py", R"PY(
import sys
for line in sys.stdin:
    print('not numbers at all', flush=True)
)PY");
        ExternalLm lm("python3 " + script, vocab, TokenizerMode::whitespace, 5000);
        CHECK_THROWS_AS(lm.next_token_dist(std::vector<TokenId>{4}), LmProtocolError);
    }

    SUBCASE("backend exits early") {
        ExternalLm lm("true", vocab, TokenizerMode::whitespace, 5000);
        CHECK_THROWS_AS(lm.next_token_dist(std::vector<TokenId>{4}), LmProtocolError);
    }
}

TEST_CASE("a silent backend raises a timeout error") {
    TempDir tmp;
    auto vocab = make_vocab(6);
    auto script = write_script(tmp, "sleepy.py", R"PY(
import sys, time
for line in sys.stdin:
    time.sleep(30)
)PY");
    ExternalLm lm("python3 " + script, vocab, TokenizerMode::whitespace, 300);
    CHECK_THROWS_AS(lm.next_token_dist(std::vector<TokenId>{4}), LmTimeoutError);
}
