#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "hardneg/lm.hpp"

namespace hardneg {

// Interpolated Kneser-Ney n-gram model with a fixed discount per order and a
// uniform floor, so every token keeps positive probability under every
// context. Raw counts are taken over sequences padded with order-1 BOS
// tokens; the top level uses raw counts, lower levels use continuation type
// counts derived from the raw counts one order up.
class NGramLM final : public LanguageModel {
public:
    static NGramLM train(const Dataset& corpus, int order,
                         TokenizerMode mode = TokenizerMode::whitespace,
                         double discount = 0.75);

    const Vocab& vocab() const override { return *vocab_; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }

    ProbDist next_token_dist(std::span<const TokenId> context) const override;
    std::vector<double> token_log_probs(std::span<const TokenId> context,
                                        std::span<const TokenId> response) const override;

    // Single-token path; walks the same backoff chain as next_token_dist.
    double token_prob(std::span<const TokenId> context, TokenId token) const;

    int order() const { return order_; }

    // Versioned text dump; load rejects anything but the current version.
    void save(const std::string& path) const;
    static NGramLM load(const std::string& path);

private:
    NGramLM() = default;

    struct Row {
        double total = 0.0;
        std::unordered_map<TokenId, double> cont;
    };
    using Table = std::unordered_map<std::string, Row>;

    void count_sequence(const std::vector<TokenId>& encoded);
    void build_levels();

    static std::string key_of(std::span<const TokenId> ids);

    int order_ = 0;
    std::vector<double> discounts_;                           // one per order
    std::vector<std::unordered_map<std::string, std::uint64_t>> raw_; // raw_[k-1]: k-gram -> count
    std::vector<Table> levels_;                               // levels_[k-1]: (k-1)-id context rows
    std::shared_ptr<const Vocab> vocab_;
    Tokenizer tokenizer_;
};

} // namespace hardneg
