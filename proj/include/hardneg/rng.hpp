#pragma once

#include <cstdint>
#include <string_view>

namespace hardneg {

// splitmix64 stream. Hand-rolled so that a given seed produces the same
// byte-identical stream on every platform; the stdlib distributions do not
// guarantee that.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n); n must be > 0. Modulo bias is ~n/2^64, irrelevant
    // at the pool sizes used here.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(next() % static_cast<std::uint64_t>(n));
    }

private:
    std::uint64_t state_;
};

// Child-seed derivation: pure function of (master seed, tag, index), so
// per-conversation and per-candidate streams are reproducible regardless of
// scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

} // namespace hardneg
