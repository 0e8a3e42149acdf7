#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

// idf(t) = ln((1 + D) / (1 + df(t))) + 1, df counted over examples (context
// turns plus response form one document). Always > 0, also for unseen tokens.
struct IdfTable {
    std::unordered_map<std::string, double> idf;
    std::size_t doc_count = 0;

    double idf_of(const std::string& token) const;
};

IdfTable build_idf(const Dataset& corpus, TokenizerMode mode);

struct KeywordCandidate {
    std::vector<std::string> tokens; // 1..3, contiguous in some context turn
    double score = 0.0;
    std::size_t source_turn = 0;     // first turn containing the phrase
};

using StopwordSet = std::unordered_set<std::string>;

// One token per line, UTF-8; blank lines and lines starting with '#' skipped.
StopwordSet load_stopwords(const std::string& path);

// tf-idf ranked uni/bi/trigrams from the conversation history. Token score is
// tf(token in conv) * idf(token); a phrase scores the mean of its token
// scores, which keeps trigrams from winning on length alone. Phrases touching
// a stopword or a reserved control token are dropped. Ties break by earlier
// source turn, then lexicographically.
std::vector<KeywordCandidate> extract_keywords(const Conversation& conv, const IdfTable& idf,
                                               std::size_t top_k, const StopwordSet& stopwords,
                                               TokenizerMode mode);

} // namespace hardneg
