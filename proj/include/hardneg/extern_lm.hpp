#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hardneg/lm.hpp"

namespace hardneg {

// LanguageModel backed by an external process speaking a line protocol on
// its standard streams, so a neural model can stand in for the n-gram one
// without touching any other module.
//
//   request:  DIST <ctx-id> <ctx-id> ...\n
//   response: <p_0> <p_1> ... <p_{V-1}>\n            (V probabilities)
//
//   request:  SCORE <ctx-id> ... | <resp-id> ...\n
//   response: <logp_1> ... <logp_K>\n                (natural-log, one per response token)
//
// Replies that do not parse, have the wrong arity, or contain non-finite
// values raise LmProtocolError; a reply that does not arrive within the
// timeout raises LmTimeoutError.
class ExternalLm final : public LanguageModel {
public:
    // Spawns `command` through /bin/sh. The vocabulary (and therefore V) is
    // agreed out of band and supplied here.
    ExternalLm(const std::string& command, std::shared_ptr<const Vocab> vocab,
               TokenizerMode mode, int timeout_ms = 5000);
    ~ExternalLm() override;

    ExternalLm(const ExternalLm&) = delete;
    ExternalLm& operator=(const ExternalLm&) = delete;

    const Vocab& vocab() const override { return *vocab_; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }

    ProbDist next_token_dist(std::span<const TokenId> context) const override;
    std::vector<double> token_log_probs(std::span<const TokenId> context,
                                        std::span<const TokenId> response) const override;

private:
    void send_line(const std::string& line) const;
    std::string read_line() const;
    std::vector<double> parse_numbers(const std::string& line, std::size_t expected,
                                      const char* what) const;

    std::shared_ptr<const Vocab> vocab_;
    Tokenizer tokenizer_;
    int timeout_ms_;
    int child_pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    mutable std::string buffer_;
};

} // namespace hardneg
