#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>

namespace maptrace {

// Out-of-range class id marking pixels excluded from losses and metrics.
inline constexpr int8_t kIgnoreLabel = -1;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// splitmix64; used for seed derivation and as the engine behind Rng streams.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4ecda082645aULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a tag path.
// Training phases, epochs and generator sub-streams each get their own
// derived seed so that interrupted runs can re-create any stream in
// isolation.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
    uint64_t s = base ^ 0x6a09e667f3bcc909ULL;
    splitmix64(s);
    for (uint64_t t : tags) {
        s ^= t + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        splitmix64(s);
    }
    return splitmix64(s);
}

inline uint64_t tag(const char* name) {
    // FNV-1a over the tag name, so call sites can use readable labels.
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* p = name; *p; ++p) h = (h ^ (uint64_t)(uint8_t)*p) * 0x100000001b3ULL;
    return h;
}

// xoshiro256++ stream. Self-contained so that draws are reproducible across
// platforms and standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_double() { return (double)(next_u64() >> 11) * 0x1.0p-53; }
    float next_float() { return (float)(next_u64() >> 40) * 0x1.0p-24f; }

    // Uniform integer in [0, n). Rejection-free (n is tiny everywhere we use it).
    uint32_t next_below(uint32_t n) {
        return (uint32_t)(((__uint128_t)next_u64() * n) >> 64);
    }

    // Uniform in [lo, hi].
    int next_int(int lo, int hi) { return lo + (int)next_below((uint32_t)(hi - lo + 1)); }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double normal() {
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = next_double();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <class T>
    void shuffle(T* data, size_t n) {
        for (size_t i = n; i > 1; --i) {
            size_t j = next_below((uint32_t)i);
            std::swap(data[i - 1], data[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace maptrace
