#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "affpcl/algorithms.hpp"
#include "affpcl/model.hpp"

namespace affpcl {

// Squared errors of one run at one recorded round.
struct MetricsRecord {
    std::string run_id;
    std::uint64_t seed = 0;
    AlgorithmId algorithm;
    std::size_t t = 0;
    std::vector<double> agent_error;  // ||x^i_t - x^i_*||^2
    double mse0 = 0.0;                // mean of agent_error
    std::size_t center = kAggregate;  // kAggregate when unknown
    double center_error = 0.0;
    std::optional<double> theta_error;  // ||theta_c - theta^c_*||^2
};

double mean_of(const std::vector<double>& values);

MetricsRecord make_record(std::string run_id, std::uint64_t seed, const AlgorithmId& algorithm,
                          const LearnerState& state, const std::vector<Vector>& targets,
                          std::size_t center);

struct NuEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

struct HeterogeneityReport {
    double delta_env = 0.0;
    double delta_obj = 0.0;
    std::vector<double> delta_cen;
    std::vector<double> delta_cen_env;  // ||mu^i - mu^0||_TV
    std::vector<double> tv_standard_error;
    NuEstimate nu;
    bool nu_estimated = false;
    double effective_env = 0.0;
    double effective_obj = 0.0;
    std::vector<double> effective_cen;
    double g_b = 0.0;       // max of ||theta^i_*|| and ||theta^c_*||
    double g_b_mean = 0.0;  // max of ||bbar^i|| over agents and the aggregate
};

struct ReportOptions {
    std::size_t nu_samples = 2000;  // 0 skips the nu estimate
    std::size_t tv_samples = 100000;
    std::uint64_t seed = 0;
};

// Raw scores, nu and the effective scores. delta_cen^i uses the TV distance to
// the mixture and ||bbar^i - bbar^0|| / (2 g_b_mean).
HeterogeneityReport heterogeneity_report(const Instance& inst, const ReportOptions& opts = {});

// min(1, nu * raw) for every score; the raw scores when nu was skipped.
HeterogeneityReport effective_heterogeneity(HeterogeneityReport report);

// argmin_i delta_cen^i, lowest index on ties.
std::size_t center_agent(const HeterogeneityReport& report);

// A family of random feature matrices A(s) with known means, for estimating
// nu = max_i ||Dbar^i (Abar^i)^{-1}||, D(s) = sqrt(A(s)^T A(s)).
struct NuModel {
    std::vector<Matrix> abar;
    std::function<Matrix(std::size_t agent, Stream& rng)> sample;
};

// Monte Carlo Dbar from `samples` draws per agent against the exact Abar.
// The standard error is a grouped jackknife over 20 blocks. Throws
// InvalidConfig for samples < 100 and SingularMatrix for a singular Abar.
NuEstimate estimate_nu(const NuModel& model, std::size_t samples, std::uint64_t seed);

// Exact for finite families (zero standard error); Monte Carlo otherwise.
NuEstimate estimate_nu(const Instance& inst, std::size_t samples, std::uint64_t seed);

NuModel instance_nu_model(const Instance& inst);

// A(s) = rotation by s in R^2 with s uniform on [0, 2 pi - eps].
NuModel rotation_nu_model(double eps);

// A(s) = (I + U(s)) Abar with U(s) = +-eps Q, Q a fixed random orthogonal
// matrix, so U is zero-mean and ||U(s)|| = eps.
NuModel multiplicative_nu_model(double eps, std::size_t d, std::uint64_t seed);

// A(s) = c c^T + 0.5 I with c ~ N(m, I): symmetric PSD, so nu = 1.
NuModel psd_nu_model(std::size_t d, std::uint64_t seed);

}  // namespace affpcl
