#pragma once

#include <cstdint>
#include <vector>

namespace cloudseg {

// Deterministic splitmix64 generator. The standard library distributions are
// implementation-defined, so every draw the toolkit makes goes through this
// to keep seeded runs bit-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 24 bits of mantissa.
    float next_float() {
        return static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f);
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform index in [0, n). n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        // multiply-shift; bias is < 2^-64 * n, irrelevant at toolkit scale
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    // Stable per-record sub-generator for parallel dataset work.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
        Rng r(seed ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

} // namespace cloudseg
