#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Deterministic RNG: xoshiro256** seeded through splitmix64. Every stream in
// the project is forked from one root seed by (label, index), so no global
// state exists and any artifact can be regenerated from its recorded seed.
namespace tarslab {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
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

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi], inclusive. Rejection-free bounded draw.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto wide = static_cast<unsigned __int128>(next_u64()) * span;
        return lo + static_cast<std::int64_t>(wide >> 64);
    }

    // Standard normal via Box-Muller; one draw per pair, spare discarded so
    // the stream layout stays position-independent.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Child stream keyed by a label and index, independent of draw order in
    // the parent.
    Rng fork(std::string_view label, std::uint64_t index) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (const char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        std::uint64_t x = state_[0] ^ h ^ (index * 0x9e3779b97f4a7c15ULL);
        return Rng(splitmix64(x));
    }

  private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace tarslab
