#include "fedni/rng.hpp"

#include <cmath>

namespace fedni {

double Rng::normal() {
    // u1 in (0, 1] so the log is finite
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}
} // namespace

Rng Rng::derive(std::uint64_t salt) const { return Rng(mix_seed(seed_ ^ mix_seed(salt))); }

Rng Rng::derive(std::string_view tag) const { return derive(fnv1a(tag)); }

} // namespace fedni
