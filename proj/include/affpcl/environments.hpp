#pragma once

#include <cstddef>
#include <vector>

#include "affpcl/model.hpp"
#include "affpcl/rng.hpp"

namespace affpcl {

// One stochastic sample of an agent's system.
//
// The objective is b(s) = lift(s) * y(s) with y(s) = Phi(s) theta^i in the
// objective parameter space. For Gaussian and tabular instances the objective
// space is R^d and `lift` is empty (identity); TD instances carry per-
// transition rewards and lift them with phi(o).
struct Observation {
    std::size_t agent = 0;
    State state;
    Matrix a;
    Vector b;
    Matrix phi;
    Vector y;
    Matrix lift;  // empty means identity
    Vector psi;   // one-hot state encoding; empty for Gaussian states

    // lift * v
    Vector lift_objective(const Vector& v) const;
    // Estimated objective at this sample for objective weights theta.
    Vector objective_for(const Vector& theta) const { return lift_objective(phi * theta); }
};

// One synchronized round: an observation per agent plus the server-side
// ratio table rho[i][j] = rho^i(s^j).
struct RoundBatch {
    std::size_t t = 0;
    std::vector<Observation> obs;
    std::vector<std::vector<double>> rho;
};

State sample_state(const Instance& inst, std::size_t agent, Stream& rng);

// Pure function of (instance, agent, state).
Observation observe(const Instance& inst, std::size_t agent, const State& state);

// TD(0) sample for the transition encoded by `state` (index o * S + o'):
// A = phi(o)(phi(o) - gamma phi(o'))^T, b = phi(o) R(o, o').
Observation mrp_observation(const MrpInstance& mrp, std::size_t agent, const Vector& rewards,
                            const State& state);

// b^i(state); cheaper than a full observe() when only the objective is needed.
Vector objective_at(const Instance& inst, std::size_t agent, const State& state);

// mu^i(s) / mu^0(s) with mu^0 the uniform mixture; 0/0 := 0.
double density_ratio(const Instance& inst, std::size_t agent, const State& state);

// All n ratios at one state, sharing the mixture evaluation.
std::vector<double> density_ratios(const Instance& inst, const State& state);

// Exact ratio table rho[i][j] = mu^i(s^j) / mu^0(s^j).
std::vector<std::vector<double>> exact_ratio_table(const Instance& inst,
                                                   const std::vector<Observation>& obs);

// Total variation distance between agents i and j (kAggregate = mixture).
// Finite families are exact. Gaussian pairs use the equal-covariance closed
// form; distances to the Gaussian mixture have no closed form and are
// estimated by Monte Carlo (see mixture_tv_monte_carlo).
double tv_distance(const Instance& inst, std::size_t i, std::size_t j);

struct TvEstimate {
    std::vector<double> value;           // per agent ||mu^i - mu^0||_TV
    std::vector<double> standard_error;
};

// ||mu^i - mu^0||_TV = E_{mu^0}[(rho^i - 1)_+] for every agent at once, from
// `samples` mixture draws stratified over agents. Exact (zero error) for
// finite families.
TvEstimate mixture_tv(const Instance& inst, std::size_t samples, std::uint64_t seed);

// 2 Phi(|m_i - m_j| / 2) - 1 for N(m_i, I) vs N(m_j, I).
double gaussian_tv(const Vector& mean_i, const Vector& mean_j);

struct CoupledDraw {
    State agent_state;
    State mixture_state;
    bool coupled = false;
};

// Maximal coupling of mu^i and mu^0: with probability 1 - TV both states come
// from the normalized overlap min(mu^i, mu^0), otherwise independently from
// the normalized residuals. Finite families only.
CoupledDraw coupled_sample(const Instance& inst, std::size_t agent, Stream& rng);

}  // namespace affpcl
