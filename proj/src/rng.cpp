#include "affpcl/rng.hpp"

#include <cmath>

namespace affpcl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; only used to turn a tag into a 64-bit constant.
std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                          std::uint64_t b) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ hash_tag(tag));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b * 0xd6e8feb86659fd93ULL));
    return h;
}

Vector Stream::normal_vector(std::size_t dim) {
    Vector v(dim);
    for (double& x : v) x = normal();
    return v;
}

Vector Stream::unit_vector(std::size_t dim) {
    for (;;) {
        Vector v = normal_vector(dim);
        const double len = v.norm();
        if (len > 1e-12) return (1.0 / len) * std::move(v);
    }
}

Matrix Stream::normal_matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& x : m.values()) x = normal();
    return m;
}

std::size_t Stream::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        acc += weights[k];
        last_positive = k;
        if (u < acc) return k;
    }
    return last_positive;
}

}  // namespace affpcl
