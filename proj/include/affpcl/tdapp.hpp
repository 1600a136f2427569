#pragma once

#include <cstdint>

#include "affpcl/environments.hpp"
#include "affpcl/model.hpp"

namespace affpcl {

// n MRPs over S states: P^i = (1 - delta_kernel) P_base + delta_kernel P^i_pert
// and R^i = R_base + delta_reward u_i with u_i a random unit vector. Features
// are unit-norm random vectors in R^d. Throws GenerationFailed when no
// attempt yields chains with a well-defined stationary distribution.
MrpInstance generate_mrp(std::size_t n, std::size_t states, std::size_t d, double gamma,
                         double delta_kernel, double delta_reward, std::uint64_t seed);

// pi with pi P = pi and sum(pi) = 1. Throws SingularMatrix for reducible
// chains.
Vector stationary_distribution(const Matrix& p);

Observation bellman_observation(const MrpInstance& mrp, std::size_t agent, std::size_t from,
                                std::size_t to);

// Expected TD(0) system of agent i: Phi^T diag(pi) (Phi - gamma P Phi) and
// Phi^T diag(pi) rbar with rbar(o) = sum_o' P(o'|o) R(o, o').
SystemMeans td_means(const MrpInstance& mrp, std::size_t agent);

// Exact TD fixed point of agent i.
Vector td_reference(const MrpInstance& mrp, std::size_t agent);

// Full multi-agent instance. The objective parameters are the per-transition
// rewards, so Phi(s) = e_s e_s^T and y(s) = R(s) in R^{S*S}.
Instance build_mrp_instance(const InstanceConfig& cfg, MrpInstance mrp);

// Uses tabular_size as S, delta_env as delta_kernel and delta_obj as
// delta_reward.
Instance generate_mrp_instance(const InstanceConfig& cfg);

}  // namespace affpcl
