#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

namespace corpus_forge {

struct Hash128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    friend bool operator==(const Hash128&, const Hash128&) = default;
    friend std::strong_ordering operator<=>(const Hash128& a, const Hash128& b) {
        if (auto c = a.hi <=> b.hi; c != 0) return c;
        return a.lo <=> b.lo;
    }
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept {
        return static_cast<std::size_t>(h.lo ^ (h.hi * 0x9E3779B97F4A7C15ULL));
    }
};

// MurmurHash3 x64_128.
Hash128 murmur3_128(std::string_view data, std::uint64_t seed = 0);

inline std::uint64_t hash64(std::string_view data, std::uint64_t seed = 0) {
    return murmur3_128(data, seed).lo;
}

}  // namespace corpus_forge
