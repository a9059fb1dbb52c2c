#pragma once

#include <cstdint>
#include <random>

namespace modescope {

/// Mixes a base seed with a stream tag (splitmix64 finalizer). Replicate r of
/// a run seeded with s always draws from derive_seed(s, r), which is what
/// makes results independent of how replicates are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return unit_(engine_); }
    double uniform(double a, double b) { return a + (b - a) * unit_(engine_); }
    double normal() { return normal_(engine_); }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_seed(seed, stream));
}

}  // namespace modescope
