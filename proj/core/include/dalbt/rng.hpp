#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace dalbt {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Combines a seed with a stream tag so independent consumers (shuffling,
// per-sample augmentations, initialization) never share a stream.
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

// Seeded RNG with named sub-streams. derive() is the only way new streams
// are created, which keeps results independent of evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

    Rng derive(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

    std::uint64_t bits() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return n ? engine_() % n : 0;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean = 0.0, double sigma = 1.0) {
        std::normal_distribution<double> dist(mean, sigma);
        return dist(engine_);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace dalbt
