#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace ifs {

// Portable seeded generator. std::uniform_real_distribution is
// implementation-defined, so uniform draws are built from raw 64-bit output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    Eigen::VectorXd uniform_vector(Eigen::Index dim, double lo, double hi) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
        return v;
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent stream seeds from (seed, tags).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace ifs
