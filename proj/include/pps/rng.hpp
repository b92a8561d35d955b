#pragma once

// Reproducible random numbers for stream generation.
//
// Generator: xoshiro256** 1.0 (Blackman & Vigna), state filled from the seed
// by SplitMix64. Independent sub-streams are obtained by mixing a stream id
// into the seed (derive_seed), so parallel generation never shares state.
// All variates are computed here from raw 64-bit outputs rather than through
// <random> distributions, whose algorithms are implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>

namespace pps {

struct Seed {
    std::uint64_t value = 0;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for the `stream_id`-th independent sub-stream of `seed`.
inline constexpr Seed derive_seed(Seed seed, std::uint64_t stream_id) {
    std::uint64_t s = seed.value ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
    return Seed{splitmix64(s)};
}

class Rng {
public:
    static constexpr const char* kName = "xoshiro256**-1.0/splitmix64";

    explicit Rng(Seed seed) {
        std::uint64_t sm = seed.value;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_open_zero() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double rate) { return -std::log(uniform_open_zero()) / rate; }

    // Standard normal, Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Density proportional to x^2 exp(-x^2 / (2 a^2)) on x >= 0: the norm of
    // a 3-vector of independent N(0, a^2) components.
    double maxwell(double scale) {
        const double x = normal(), y = normal(), z = normal();
        return scale * std::sqrt(x * x + y * y + z * z);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pps
