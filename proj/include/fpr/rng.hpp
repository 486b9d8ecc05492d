#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace fpr {

// 64-bit FNV-1a, used for seed derivation and content hashing.
inline uint64_t fnv1a(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Stable fan-out of a master seed into per-stage seeds: hash the tag into the seed.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
    uint64_t h = fnv1a(tag);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = char((base >> (8 * i)) & 0xff);
    return fnv1a(std::string_view(buf, 8), h);
}

inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = char((index >> (8 * i)) & 0xff);
    return fnv1a(std::string_view(buf, 8), derive_seed(base, tag));
}

// mt19937_64 is fully specified by the standard; the distributions here are
// hand-rolled so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1) with 53 bits of precision
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_index(uint64_t n) {
        // rejection-free modulo bias is negligible for n << 2^64, but stay exact
        uint64_t limit = ~uint64_t(0) - ~uint64_t(0) % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    int uniform_int(int lo, int hi) { return lo + int(uniform_index(uint64_t(hi - lo + 1))); }

    // Box-Muller; one value per call keeps the stream position predictable
    double normal(double mean = 0.0, double sigma = 1.0) {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace fpr
