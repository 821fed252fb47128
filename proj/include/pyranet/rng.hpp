#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace pyranet {

// SplitMix64 (Steele, Lea & Flood 2014). The state advances by the constant
// 0x9E3779B97F4A7C15 on every draw and the output is the state passed through
// the mixing function
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
// Everything derived from it (uniform reals, bounded integers, shuffles) is
// defined here rather than through <random> distributions, whose output is
// implementation-defined, so a seed yields the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) by rejection, free of modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = 0;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (one value per two uniforms).
    double normal();

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Independent stream for worker `k`, derived from the current state.
    [[nodiscard]] Rng split(std::uint64_t k) const {
        Rng mixer(state_ ^ (0xD1B54A32D192ED03ULL * (k + 1)));
        return Rng(mixer.next_u64());
    }

    [[nodiscard]] std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

}  // namespace pyranet
