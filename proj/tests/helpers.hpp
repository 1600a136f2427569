#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "affpcl/algorithms.hpp"
#include "affpcl/environments.hpp"
#include "affpcl/model.hpp"

namespace testutil {

using namespace affpcl;

inline bool close(const Vector& a, const Vector& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (std::abs(a[k] - b[k]) > tol) return false;
    return true;
}

inline bool close(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return (a - b).max_abs() <= tol;
}

// Noise-free Gaussian instance: A(s) = a_base and Phi(s) = phi_base for
// every state.
inline Instance deterministic_instance(const Matrix& a_base, const Matrix& phi_base,
                                       const std::vector<Vector>& thetas,
                                       std::vector<Vector> means = {}) {
    InstanceConfig cfg;
    cfg.eps_a = 0.0;
    cfg.eps_b = 0.0;
    if (means.empty()) means.assign(thetas.size(), Vector::zeros(a_base.rows()));
    return build_gaussian_instance(cfg, {std::move(means), a_base, phi_base, thetas});
}

// Scalar observation with A = a, Phi = phi and b = y = b_value.
inline Observation scalar_obs(std::size_t agent, double a, double b_value, double phi = 1.0) {
    Observation o;
    o.agent = agent;
    o.a = Matrix{{a}};
    o.b = Vector{b_value};
    o.phi = Matrix{{phi}};
    o.y = Vector{b_value};
    return o;
}

inline RoundBatch scalar_batch(const std::vector<std::pair<double, double>>& ab) {
    RoundBatch batch;
    for (std::size_t i = 0; i < ab.size(); ++i) batch.obs.push_back(scalar_obs(i, ab[i].first, ab[i].second));
    batch.rho.assign(ab.size(), std::vector<double>(ab.size(), 1.0));
    return batch;
}

inline InstanceConfig gaussian_config(std::size_t n, std::size_t d, double delta_env, double delta_obj,
                                      std::uint64_t seed) {
    InstanceConfig c;
    c.n = n;
    c.d = d;
    c.delta_env = delta_env;
    c.delta_obj = delta_obj;
    c.seed = seed;
    return c;
}

inline InstanceConfig tabular_config(std::size_t n, std::size_t d, std::size_t states, double delta_env,
                                     double delta_obj, std::uint64_t seed) {
    InstanceConfig c = gaussian_config(n, d, delta_env, delta_obj, seed);
    c.family = Family::tabular;
    c.tabular_size = states;
    return c;
}

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline TempDir::TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("affpcl-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

inline TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace testutil
