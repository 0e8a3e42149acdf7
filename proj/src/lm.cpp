#include "hardneg/lm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hardneg/errors.hpp"

namespace hardneg {

void validate(const DecodeParams& params) {
    if (!(params.top_p > 0.0 && params.top_p <= 1.0))
        throw ConfigError("top_p must be in (0, 1]");
    if (params.min_length < 1 || params.min_length > params.max_length)
        throw ConfigError("need 1 <= min_length <= max_length");
}

std::vector<double> LanguageModel::token_log_probs(std::span<const TokenId> context,
                                                   std::span<const TokenId> response) const {
    std::vector<TokenId> ids(context.begin(), context.end());
    std::vector<double> out;
    out.reserve(response.size());
    for (TokenId tok : response) {
        ProbDist dist = next_token_dist(ids);
        out.push_back(std::log(dist.at(static_cast<std::size_t>(tok))));
        ids.push_back(tok);
    }
    return out;
}

std::vector<TokenId> encode_history(const LanguageModel& lm, const Conversation& conv) {
    std::vector<TokenId> ids{Vocab::kBos};
    for (const auto& turn : conv.turns) {
        auto toks = turn.tokens.empty() ? lm.tokenizer().encode(turn.text) : turn.tokens;
        ids.insert(ids.end(), toks.begin(), toks.end());
        ids.push_back(Vocab::kSep);
    }
    return ids;
}

std::vector<TokenId> encode_dialogue(const LanguageModel& lm, const Conversation& conv,
                                     const Utterance& response) {
    auto ids = encode_history(lm, conv);
    auto toks = response.tokens.empty() ? lm.tokenizer().encode(response.text) : response.tokens;
    ids.insert(ids.end(), toks.begin(), toks.end());
    ids.push_back(Vocab::kEos);
    return ids;
}

SequenceScore score_sequence(const LanguageModel& lm, const Conversation& history,
                             std::span<const TokenId> response) {
    if (response.empty()) throw std::invalid_argument("score_sequence: empty response");
    auto ctx = encode_history(lm, history);
    SequenceScore s;
    s.token_log_probs = lm.token_log_probs(ctx, response);
    s.log_prob = std::accumulate(s.token_log_probs.begin(), s.token_log_probs.end(), 0.0);
    return s;
}

double perplexity(const SequenceScore& score) {
    if (score.length() == 0) throw std::invalid_argument("perplexity: empty score");
    return std::exp(-score.log_prob / static_cast<double>(score.length()));
}

ProbDist top_p_filter(const ProbDist& dist, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    std::vector<std::size_t> order(dist.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
    });

    ProbDist out(dist.size(), 0.0);
    double cum = 0.0;
    for (std::size_t idx : order) {
        out[idx] = dist[idx];
        cum += dist[idx];
        if (cum >= p) break;
    }
    if (cum <= 0.0) throw std::invalid_argument("top_p_filter: distribution has no mass");
    for (double& v : out) v /= cum;
    return out;
}

namespace {

std::size_t sample_index(const ProbDist& dist, Rng& rng) {
    double u = rng.uniform();
    double cum = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        last_nonzero = i;
        cum += dist[i];
        if (u < cum) return i;
    }
    return last_nonzero; // rounding left a sliver at the top
}

// Zero out EOS and renormalize; keeps the row a proper distribution.
void mask_eos(ProbDist& dist) {
    double eos = dist[static_cast<std::size_t>(Vocab::kEos)];
    if (eos <= 0.0) return;
    dist[static_cast<std::size_t>(Vocab::kEos)] = 0.0;
    double rest = 1.0 - eos;
    if (rest <= 0.0) throw std::invalid_argument("decode: model puts all mass on EOS");
    for (double& v : dist) v /= rest;
}

} // namespace

DecodeOutput decode(const LanguageModel& lm, const Conversation& history,
                    const DecodeParams& params) {
    validate(params);
    Rng rng(params.seed);
    std::vector<TokenId> ids = encode_history(lm, history);

    DecodeOutput out;
    while (out.tokens.size() < params.max_length) {
        ProbDist row = lm.next_token_dist(ids);
        if (out.tokens.size() < params.min_length) mask_eos(row);
        ProbDist filtered = top_p_filter(row, params.top_p);
        auto tok = static_cast<TokenId>(sample_index(filtered, rng));
        if (tok == Vocab::kEos) break;
        out.prob_matrix.push_back(std::move(row));
        out.tokens.push_back(tok);
        ids.push_back(tok);
    }
    return out;
}

std::vector<TokenId> continue_decode(const LanguageModel& lm, const Conversation& history,
                                     std::span<const TokenId> prefix, const DecodeParams& params) {
    validate(params);
    if (prefix.empty()) throw std::invalid_argument("continue_decode: empty prefix");
    std::vector<TokenId> out(prefix.begin(), prefix.end());
    if (std::find(out.begin(), out.end(), Vocab::kEos) != out.end()) return out;

    Rng rng(params.seed);
    std::vector<TokenId> ids = encode_history(lm, history);
    ids.insert(ids.end(), out.begin(), out.end());

    while (out.size() < params.max_length) {
        ProbDist row = lm.next_token_dist(ids);
        if (out.size() < params.min_length) mask_eos(row);
        ProbDist filtered = top_p_filter(row, params.top_p);
        auto tok = static_cast<TokenId>(sample_index(filtered, rng));
        if (tok == Vocab::kEos) break;
        out.push_back(tok);
        ids.push_back(tok);
    }
    return out;
}

} // namespace hardneg
