#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affpcl/harness.hpp"
#include "affpcl/model.hpp"

namespace affpcl {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// 0 <= rho^i <= n and mean_i rho^i(s) = 1 over `states_per_agent` draws from
// every agent.
CheckResult check_ratio_laws(const Instance& inst, std::size_t states_per_agent, std::uint64_t seed);

// With exact ratios and theta_c = theta^c_*, the Monte Carlo mean of the
// corrected local direction matches Abar^i x^i - bbar^i within `z` standard
// errors per coordinate, for `frozen` random (x, x_c) pairs.
CheckResult check_correction_unbiased(const Instance& inst, std::size_t frozen, std::size_t rounds,
                                      double z, std::uint64_t seed);

// Analytic vs Monte Carlo references: relative error <= rel_tol for
// continuous families, <= 1e-10 for finite ones.
CheckResult check_oracle_equivalence(const std::vector<Instance>& instances, std::size_t samples,
                                     double rel_tol);

CheckResult check_nu_psd(std::size_t samples, std::uint64_t seed);
CheckResult check_nu_multiplicative(double eps, std::size_t samples, std::uint64_t seed);
CheckResult check_nu_td(double gamma, std::uint64_t seed);

// Coupled DRE on n = 2 tabular instances.
struct DreOutcome {
    double weight_mse = 0.0;      // mean over seeds and agents of ||eta - eta_*||^2
    // Per seed: max over agents and states of |rho_hat - rho|.
    double mean_ratio_error = 0.0;  // averaged over seeds
    double worst_ratio_error = 0.0; // worst seed
};
DreOutcome run_coupled_dre(double delta_env, std::size_t steps, double alpha,
                           const std::vector<std::uint64_t>& seeds);
CheckResult check_coupled_dre(std::size_t steps, double alpha, const std::vector<std::uint64_t>& seeds);

CheckResult check_schedule_algebra(std::size_t triples, std::uint64_t seed);

// Serial and parallel executions of `cfg` produce byte-identical metrics.csv.
CheckResult check_determinism(const RunConfig& cfg, std::size_t threads);

// The invariant suite behind `affpcl validate`.
std::vector<CheckResult> run_validation(bool quick, std::uint64_t seed);

}  // namespace affpcl
