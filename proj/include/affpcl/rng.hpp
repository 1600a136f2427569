#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "affpcl/numerics.hpp"

namespace affpcl {

// Child seed for (seed, purpose, a, b). Streams derived with different tags
// or indices are statistically independent and never share state, so a run
// can re-derive any (seed, agent, round) stream without replaying others.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                          std::uint64_t b = 0);

// A single-owner random stream.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    Stream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0)
        : engine_(derive_seed(seed, tag, a, b)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    Vector normal_vector(std::size_t dim);
    // Uniformly distributed on the unit sphere.
    Vector unit_vector(std::size_t dim);
    Matrix normal_matrix(std::size_t rows, std::size_t cols);
    // Index drawn from the (unnormalized, nonnegative) weights.
    std::size_t categorical(std::span<const double> weights);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace affpcl
