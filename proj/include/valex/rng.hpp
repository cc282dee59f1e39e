#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace valex {

// Deterministic random source. std::mt19937_64's output sequence is fixed by
// the standard, but the <random> distributions are not, so all draws here are
// derived from raw engine words. Identical seeds give identical streams on
// every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [lo, hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// FNV-1a, optionally chained to fold several fields into one key hash.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t value, std::uint64_t h = 14695981039346656037ull) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
    }
    return h;
}

// Finalizer with full avalanche; raw FNV of near-identical strings is far too
// correlated to rank keys by.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

}  // namespace valex
