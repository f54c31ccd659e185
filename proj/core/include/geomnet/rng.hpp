#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "geomnet/errors.hpp"

namespace geomnet {

// SplitMix64 stream (Steele/Lea/Flood). Used for seeding and for deriving
// independent per-index seeds; never used as the main value stream.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

// xoshiro256++ (Blackman/Vigna), seeded through SplitMix64. Fixed algorithm,
// so equal seeds give bit-identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo,hi). Throws DomainError when the range is empty.
    double uniform(double lo, double hi) {
        if (!(lo < hi)) {
            throw DomainError("invalid uniform range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + ")");
        }
        double v = lo + uniform_double() * (hi - lo);
        if (v >= hi) v = std::nextafter(hi, lo);
        return v;
    }

    // Uniform integer in [0,n).
    std::int64_t uniform_int(std::int64_t n) {
        if (n < 1) throw DomainError("uniform_int needs n >= 1");
        return static_cast<std::int64_t>(uniform_double() * static_cast<double>(n));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

// Independent sub-streams of one root seed, tagged so that different uses
// (shape generation, augmentation, shuffling, ...) never share a stream.
enum class SeedDomain : std::uint64_t {
    shape = 1,
    augment = 2,
    shuffle = 3,
    holdout_shape = 4,
    holdout_augment = 5,
};

inline std::uint64_t derive_seed(std::uint64_t root, SeedDomain domain, std::uint64_t index) {
    SplitMix64 sm(root);
    const std::uint64_t tag = (static_cast<std::uint64_t>(domain) << 56) ^ index;
    return SplitMix64(sm.next() ^ tag).next();
}

}  // namespace geomnet
