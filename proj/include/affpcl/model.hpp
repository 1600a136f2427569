#pragma once

// Problem instances of the multi-agent linear system
//
//     E_{mu^i}[A(s)] x^i = E_{mu^i}[b^i(s)],   i = 0..n-1,
//
// together with the central (mixture-averaged) system and the central
// objective system used by the server-side learners.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "affpcl/numerics.hpp"
#include "affpcl/rng.hpp"

namespace affpcl {

enum class Family { gaussian, tabular, mrp };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

struct InstanceConfig {
    std::size_t n = 20;
    std::size_t d = 5;
    Family family = Family::gaussian;
    // Environment heterogeneity knob in [0,1]. For MRPs this mixes the
    // transition kernels.
    double delta_env = 0.0;
    // Objective heterogeneity knob >= 0. For MRPs this perturbs rewards.
    double delta_obj = 0.0;
    double eps_a = 1.0;
    double eps_b = 0.5;
    double c_a = 4.0;
    // Base feature matrices have spectrum uniform[base_scale, 2 base_scale].
    double base_scale = 3.0;
    // State count for tabular instances and MRPs.
    std::size_t tabular_size = 0;
    double gamma = 0.9;  // MRP discount
    std::uint64_t seed = 0;

    bool operator==(const InstanceConfig&) const = default;
};

// Throws InvalidConfig on violated invariants.
void validate(const InstanceConfig& cfg);

// A state: a point in R^d for Gaussian environments, an index otherwise
// (for MRPs the index encodes the transition (o, o') as o * S + o').
struct State {
    std::size_t index = 0;
    Vector point;

    bool operator==(const State&) const = default;
};

// Agent index in [0, n), or kAggregate for the averaged (mixture) system.
inline constexpr std::size_t kAggregate = std::numeric_limits<std::size_t>::max();

struct GaussianEnv {
    std::vector<Vector> means;  // mu^i = N(means[i], I)
    Matrix a_base;
    Matrix phi_base;
};

struct TabularEnv {
    std::vector<Vector> probs;      // mu^i over states
    std::vector<Vector> a_diag;     // A(s) = diag(a_diag[s])
    std::vector<Vector> phi_diag;   // Phi(s) = diag(phi_diag[s])
};

// n Markov reward processes sharing a feature map. Used by the TD module.
struct MrpInstance {
    std::size_t n = 0;
    std::size_t states = 0;
    double gamma = 0.0;
    std::vector<Matrix> transitions;  // row-stochastic, per agent
    std::vector<Vector> rewards;      // R^i(o, o') at index o * S + o'
    std::vector<Vector> features;     // phi(o), one per state
    std::vector<Vector> stationary;   // pi^i

    std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
};

struct MrpEnv {
    MrpInstance mrp;
    std::vector<Vector> probs;  // mu^i(o, o') = pi^i(o) P^i(o'|o)
};

using Environment = std::variant<GaussianEnv, TabularEnv, MrpEnv>;

struct SystemMeans {
    Matrix abar;    // E A(s)
    Matrix phibar;  // E Phi(s)
    Vector bbar;    // E b(s)
    Vector ybar;    // E y(s), the objective target in parameter space
};

struct Lambdas {
    std::vector<double> agent;  // lambda_min(sym(abar^i))
    double min_agent = 0.0;
    double central = 0.0;       // lambda_min(sym(abar^0))
    double objective = 0.0;     // lambda_min(sym(phibar^0))
};

struct Instance {
    InstanceConfig config;
    Environment env;
    std::vector<Vector> theta_star;  // per agent objective weights
    std::vector<SystemMeans> means;  // per agent
    SystemMeans aggregate;           // uniform average over agents
    std::vector<Vector> x_star;
    Vector x_star_c;
    Vector theta_star_c;
    Lambdas lambdas;

    std::size_t n() const { return theta_star.size(); }
    std::size_t dim() const { return x_star_c.size(); }
    std::size_t objective_dim() const { return theta_star_c.size(); }
    Family family() const { return config.family; }
    bool is_finite() const { return !std::holds_alternative<GaussianEnv>(env); }
    // Per-agent state distributions of a finite family; throws
    // UnsupportedFamily for Gaussian instances.
    const std::vector<Vector>& finite_probs() const;
    std::size_t state_count() const;
};

// Explicit ingredients for a Gaussian instance; generation draws these at
// random, tests can supply them directly.
struct GaussianParts {
    std::vector<Vector> means;
    Matrix a_base;
    Matrix phi_base;
    std::vector<Vector> thetas;
};

struct TabularParts {
    std::vector<Vector> probs;
    std::vector<Vector> a_diag;
    std::vector<Vector> phi_diag;
    std::vector<Vector> thetas;
};

Instance build_gaussian_instance(const InstanceConfig& cfg, GaussianParts parts);
Instance build_tabular_instance(const InstanceConfig& cfg, TabularParts parts);

Instance generate_gaussian_instance(const InstanceConfig& cfg);
Instance generate_tabular_instance(const InstanceConfig& cfg);

// Q diag(uniform[scale, 2 scale]) Q^T with Q from the QR of a Gaussian matrix.
Matrix random_pd_matrix(Stream& rng, std::size_t d, double scale);

// Exact expectations; agent == kAggregate gives the average over agents.
const SystemMeans& analytic_means(const Instance& inst, std::size_t agent);

struct ReferenceMode {
    enum class Kind { analytic, monte_carlo } kind = Kind::analytic;
    std::size_t samples = 5000;
    std::uint64_t seed = 0;

    static ReferenceMode analytic() { return {}; }
    static ReferenceMode monte_carlo(std::size_t samples, std::uint64_t seed = 0) {
        return {Kind::monte_carlo, samples, seed};
    }
    bool operator==(const ReferenceMode&) const = default;
};

// Fixed point of the agent's (or the central) system. Monte Carlo mode
// replaces the expectations by sample means; for finite families the
// expectation is evaluated exactly by enumerating states.
Vector reference_solution(const Instance& inst, std::size_t agent, const ReferenceMode& mode);

// Recomputes aggregate means, fixed points and lambdas from inst.means and
// inst.theta_star. Throws SingularMatrix if a system is singular.
void finalize_instance(Instance& inst);

}  // namespace affpcl
