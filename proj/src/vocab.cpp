#include "hardneg/vocab.hpp"

#include <stdexcept>

namespace hardneg {

Vocab::Vocab() {
    for (const char* t : {"<bos>", "<eos>", "<sep>", "<unk>"}) {
        TokenId id = static_cast<TokenId>(tokens_.size());
        tokens_.emplace_back(t);
        index_.emplace(t, id);
    }
}

TokenId Vocab::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    TokenId id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

TokenId Vocab::id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw std::out_of_range("token id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

} // namespace hardneg
