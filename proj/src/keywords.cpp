#include "hardneg/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "hardneg/errors.hpp"

namespace hardneg {

double IdfTable::idf_of(const std::string& token) const {
    auto it = idf.find(token);
    if (it != idf.end()) return it->second;
    return std::log(static_cast<double>(1 + doc_count)) + 1.0;
}

IdfTable build_idf(const Dataset& corpus, TokenizerMode mode) {
    if (corpus.examples.empty()) throw std::invalid_argument("build_idf: empty corpus");
    IdfTable table;
    table.doc_count = corpus.examples.size();

    std::unordered_map<std::string, std::size_t> df;
    std::unordered_set<std::string> seen;
    for (const auto& ex : corpus.examples) {
        seen.clear();
        for (const auto& turn : ex.context.turns)
            for (auto& tok : Tokenizer::split(mode, turn.text)) seen.insert(std::move(tok));
        for (auto& tok : Tokenizer::split(mode, ex.response.text)) seen.insert(std::move(tok));
        for (const auto& tok : seen) df[tok] += 1;
    }

    double d = static_cast<double>(1 + table.doc_count);
    for (const auto& [tok, n] : df)
        table.idf[tok] = std::log(d / static_cast<double>(1 + n)) + 1.0;
    return table;
}

StopwordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file " + path);
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        std::string tok = trim(line);
        if (tok.empty() || tok[0] == '#') continue;
        out.insert(std::move(tok));
    }
    return out;
}

namespace {

bool is_reserved_literal(const std::string& tok) {
    return tok == "<bos>" || tok == "<eos>" || tok == "<sep>" || tok == "<unk>";
}

} // namespace

std::vector<KeywordCandidate> extract_keywords(const Conversation& conv, const IdfTable& idf,
                                               std::size_t top_k, const StopwordSet& stopwords,
                                               TokenizerMode mode) {
    std::vector<std::vector<std::string>> turns;
    turns.reserve(conv.turns.size());
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& turn : conv.turns) {
        turns.push_back(Tokenizer::split(mode, turn.text));
        for (const auto& tok : turns.back()) tf[tok] += 1;
    }

    // phrase -> (first turn, token list); std::map keeps discovery deterministic
    std::map<std::vector<std::string>, std::size_t> first_turn;
    for (std::size_t t = 0; t < turns.size(); ++t) {
        const auto& toks = turns[t];
        for (std::size_t len = 1; len <= 3; ++len) {
            if (toks.size() < len) continue;
            for (std::size_t i = 0; i + len <= toks.size(); ++i) {
                bool ok = true;
                for (std::size_t j = i; j < i + len; ++j)
                    if (stopwords.count(toks[j]) || is_reserved_literal(toks[j])) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                std::vector<std::string> phrase(toks.begin() + static_cast<long>(i),
                                                toks.begin() + static_cast<long>(i + len));
                auto it = first_turn.find(phrase);
                if (it == first_turn.end()) first_turn.emplace(std::move(phrase), t);
            }
        }
    }

    std::vector<KeywordCandidate> out;
    out.reserve(first_turn.size());
    for (const auto& [phrase, turn] : first_turn) {
        double sum = 0.0;
        for (const auto& tok : phrase)
            sum += static_cast<double>(tf[tok]) * idf.idf_of(tok);
        out.push_back({phrase, sum / static_cast<double>(phrase.size()), turn});
    }

    std::sort(out.begin(), out.end(), [](const KeywordCandidate& a, const KeywordCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.source_turn != b.source_turn) return a.source_turn < b.source_turn;
        return a.tokens < b.tokens;
    });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

} // namespace hardneg
