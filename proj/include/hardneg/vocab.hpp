#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace hardneg {

using TokenId = std::int32_t;

// Token <-> id bijection with four reserved control ids at the front.
class Vocab {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kSep = 2; // turn separator
    static constexpr TokenId kUnk = 3;

    Vocab();

    // Inserts the token if absent; returns its id either way.
    TokenId add(const std::string& token);

    // kUnk for out-of-vocabulary tokens.
    TokenId id_of(const std::string& token) const;

    const std::string& token_of(TokenId id) const;
    bool contains(const std::string& token) const { return index_.count(token) > 0; }
    std::size_t size() const { return tokens_.size(); }

    static bool is_reserved(TokenId id) { return id >= kBos && id <= kUnk; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

} // namespace hardneg
