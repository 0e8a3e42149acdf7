#include "hardneg/extern_lm.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <sstream>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "hardneg/errors.hpp"

namespace hardneg {

ExternalLm::ExternalLm(const std::string& command, std::shared_ptr<const Vocab> vocab,
                       TokenizerMode mode, int timeout_ms)
    : vocab_(std::move(vocab)), tokenizer_(mode, vocab_), timeout_ms_(timeout_ms) {
    int to_pipe[2];   // parent -> child
    int from_pipe[2]; // child -> parent
    if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
        throw IoError("pipe failed: " + std::string(std::strerror(errno)));

    pid_t pid = fork();
    if (pid < 0) throw IoError("fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        dup2(to_pipe[0], STDIN_FILENO);
        dup2(from_pipe[1], STDOUT_FILENO);
        close(to_pipe[0]);
        close(to_pipe[1]);
        close(from_pipe[0]);
        close(from_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_pipe[0]);
    close(from_pipe[1]);
    child_pid_ = pid;
    to_child_ = to_pipe[1];
    from_child_ = from_pipe[0];
}

ExternalLm::~ExternalLm() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    if (child_pid_ > 0) {
        int status = 0;
        if (waitpid(child_pid_, &status, WNOHANG) == 0) {
            kill(child_pid_, SIGTERM);
            waitpid(child_pid_, &status, 0);
        }
    }
}

void ExternalLm::send_line(const std::string& line) const {
    std::string out = line + "\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
        ssize_t n = write(to_child_, out.data() + sent, out.size() - sent);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw LmProtocolError("external LM closed its input: " +
                                  std::string(std::strerror(errno)));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string ExternalLm::read_line() const {
    while (true) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        struct pollfd pfd{from_child_, POLLIN, 0};
        int ready = poll(&pfd, 1, timeout_ms_);
        if (ready == 0)
            throw LmTimeoutError("external LM did not answer within " +
                                 std::to_string(timeout_ms_) + " ms");
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw LmProtocolError("poll failed: " + std::string(std::strerror(errno)));
        }
        char chunk[4096];
        ssize_t n = read(from_child_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw LmProtocolError("read failed: " + std::string(std::strerror(errno)));
        }
        if (n == 0) throw LmProtocolError("external LM exited mid-conversation");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::vector<double> ExternalLm::parse_numbers(const std::string& line, std::size_t expected,
                                              const char* what) const {
    std::istringstream is(line);
    std::vector<double> out;
    out.reserve(expected);
    double v = 0.0;
    while (is >> v) out.push_back(v);
    std::string rest;
    if (!is.eof() && is.fail()) {
        is.clear();
        is >> rest;
    }
    if (!rest.empty())
        throw LmProtocolError(std::string("malformed ") + what + " reply: \"" + line + "\"");
    if (out.size() != expected)
        throw LmProtocolError(std::string(what) + " reply has " + std::to_string(out.size()) +
                              " values, expected " + std::to_string(expected));
    for (double x : out)
        if (!std::isfinite(x))
            throw LmProtocolError(std::string(what) + " reply contains a non-finite value");
    return out;
}

namespace {

void append_ids(std::string& line, std::span<const TokenId> ids) {
    for (TokenId id : ids) {
        line += ' ';
        line += std::to_string(id);
    }
}

} // namespace

ProbDist ExternalLm::next_token_dist(std::span<const TokenId> context) const {
    std::string req = "DIST";
    append_ids(req, context);
    send_line(req);
    auto probs = parse_numbers(read_line(), vocab_->size(), "DIST");
    for (double p : probs)
        if (p < 0.0) throw LmProtocolError("DIST reply contains a negative probability");
    return probs;
}

std::vector<double> ExternalLm::token_log_probs(std::span<const TokenId> context,
                                                std::span<const TokenId> response) const {
    std::string req = "SCORE";
    append_ids(req, context);
    req += " |";
    append_ids(req, response);
    send_line(req);
    return parse_numbers(read_line(), response.size(), "SCORE");
}

} // namespace hardneg
