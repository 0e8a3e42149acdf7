#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hardneg {

// Malformed input data; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what), line(0) {}
    std::size_t line;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Conversation too short for the requested garbling strategy; callers
// route to the other strategy or to the random-negative fallback.
struct NotGarblableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sampling pool has no utterance outside the excluded conversation.
struct NoCandidateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// External LM adapter failures, kept distinct so callers can tell a hung
// backend from a misbehaving one.
struct LmTimeoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LmProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hardneg
