#ifndef FEDNI_RNG_HPP
#define FEDNI_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedni {

/// Deterministic random stream. All randomness in the project flows through
/// this class; distributions are implemented explicitly (Box-Muller normal,
/// Fisher-Yates shuffle) so sequences are reproducible across platforms
/// independent of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) { return std::size_t(next_u64() % n); }

    /// Standard normal via Box-Muller. Stateless across calls (one value per
    /// draw, two uniforms consumed).
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const std::size_t j = uniform_index(i + 1);
            std::swap(v[i], v[j]);
        }
    }

    /// Independent child stream derived from this stream's *seed* (not its
    /// current state): derive(tag) is stable no matter how much of the parent
    /// stream has been consumed.
    Rng derive(std::uint64_t salt) const;
    Rng derive(std::string_view tag) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// SplitMix64 mixing step; used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

} // namespace fedni

#endif
