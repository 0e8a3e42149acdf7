#include "hardneg/rng.hpp"

namespace hardneg {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = mix(master + 0x9e3779b97f4a7c15ull);
    h = mix(h ^ fnv1a64(tag));
    h = mix(h ^ (index + 0x2545f4914f6cdd1dull));
    return h;
}

} // namespace hardneg
