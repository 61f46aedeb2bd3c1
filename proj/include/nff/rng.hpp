#pragma once

#include <cstdint>
#include <random>
#include <utility>

namespace nff {

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so the few we need are spelled out here to keep seeded runs
// byte-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    /// True with probability p; p <= 0 never fires, p >= 1 always does.
    bool bernoulli(double p) { return uniform() < p; }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace nff
