#ifndef PLATED_RNG_HPP
#define PLATED_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace plated {

// Deterministic, portable random stream (splitmix64 core). The standard
// <random> distributions are not bit-stable across library implementations,
// so everything that must reproduce byte-identical artifacts draws from here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Derives an independent stream from (seed, stream_index), used for
    // per-run / per-epoch seeding so resumed work replays identically.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_index) {
        Rng mixer(seed ^ (0x9e3779b97f4a7c15ULL * (stream_index + 1)));
        mixer.next_u64();
        return Rng(mixer.next_u64());
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::size_t index(std::size_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = ~0ULL >> __builtin_clzll(n - 1 ? n - 1 : 1);
        for (;;) {
            std::uint64_t v = next_u64() & mask;
            if (v < n) return static_cast<std::size_t>(v);
        }
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace plated

#endif  // PLATED_RNG_HPP
