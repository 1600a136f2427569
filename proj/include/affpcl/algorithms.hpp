#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "affpcl/environments.hpp"
#include "affpcl/model.hpp"

namespace affpcl {

enum class AlgorithmKind { independent, fedavg, affpcl_known, affpcl_full };
enum class CdlVariant { v1, v2 };
enum class DreMode { exact, coupled_tabular, oracle_off };

std::string to_string(AlgorithmKind k);
std::string to_string(CdlVariant v);
std::string to_string(DreMode m);
AlgorithmKind algorithm_kind_from_string(const std::string& name);
CdlVariant cdl_variant_from_string(const std::string& name);
DreMode dre_mode_from_string(const std::string& name);

struct AlgorithmId {
    AlgorithmKind kind = AlgorithmKind::affpcl_full;
    CdlVariant cdl = CdlVariant::v1;
    DreMode dre = DreMode::exact;

    bool operator==(const AlgorithmId&) const = default;
};

// Throws HeterogeneousEnvironment / UnsupportedFamily when the algorithm
// cannot run on the instance.
void check_compatible(const AlgorithmId& id, const Instance& inst);

// All decision variables at round t. Every variable starts at zero.
struct LearnerState {
    std::size_t t = 0;
    std::vector<Vector> x;
    Vector x_c;
    Vector theta_c;
    // Per-agent DRE weights; rho_hat^i(s) = 1 + psi(s)^T eta^i.
    std::optional<std::vector<Vector>> eta;
    Vector x_avg;

    static LearnerState zeros(std::size_t n, std::size_t d, std::size_t p);
    static LearnerState zeros(const Instance& inst);
    void refresh_average();
};

// Step sizes for one round. A single number applies to every learner.
struct RoundSteps {
    double local = 0.0;
    std::vector<double> per_agent;  // overrides `local` when non-empty
    double central = 0.0;
    double objective = 0.0;
    double dre = 0.0;

    RoundSteps() = default;
    RoundSteps(double alpha) : local(alpha), central(alpha), objective(alpha), dre(alpha) {}  // NOLINT

    double agent(std::size_t i) const { return per_agent.empty() ? local : per_agent.at(i); }
};

// A(s) x - b(s)
Vector residual(const Observation& obs, const Vector& x);

// A(s) x - lift(s) Phi(s) theta: the central residual with the estimated
// objective in place of b.
Vector estimated_residual(const Observation& obs, const Vector& x, const Vector& theta);

// Round inputs. Samples are drawn from per-(seed, agent, round) streams, so
// every algorithm sees the same samples for the same seed.
struct BatchOptions {
    bool ratios = false;        // fill batch.rho
    DreMode dre = DreMode::exact;
};

RoundBatch make_batch(const Instance& inst, std::uint64_t seed, std::size_t t,
                      const BatchOptions& opts, const LearnerState* state = nullptr);

// Ratio table from DRE weights: rho[i][j] = clamp(1 + psi(s^j)^T eta^i, 0, n).
std::vector<std::vector<double>> estimated_ratio_table(const std::vector<Vector>& eta,
                                                       const std::vector<Observation>& obs);

LearnerState independent_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps);

// Central FedAvg update followed by a broadcast of x_c to every agent.
LearnerState fedavg_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps);

// Central objective estimation.
LearnerState coe_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps);

// Central decision learning.
LearnerState cdl_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps,
                      CdlVariant variant);

// Personalized update with the true central objective and the implicit
// central iterate x_avg. Requires a homogeneous environment.
LearnerState affpcl_known_step(const Instance& inst, LearnerState state, const RoundBatch& batch,
                               const RoundSteps& steps);

// (1/n) sum_j rho[i][j] (A(s^j) x_c - lift Phi(s^j) theta_c)
Vector importance_corrected_direction(std::size_t i, const RoundBatch& batch, const Vector& x_c,
                                      const Vector& theta_c);

// One synchronized round of CDL, COE and the personalized local updates, all
// evaluated at the pre-round iterates.
LearnerState affpcl_full_round(LearnerState state, const RoundBatch& batch, const RoundSteps& steps,
                               CdlVariant variant);

// eta - alpha (psi(s0) psi(s0)^T eta - (psi(s^i) - psi(s0))) for one-hot psi.
Vector dre_coupled_step(Vector eta, const CoupledDraw& draw, double alpha);

// Advances every agent's DRE weights by one coupled step.
void dre_round(const Instance& inst, LearnerState& state, std::uint64_t seed, double alpha);

// One round of the chosen algorithm; handles DRE bookkeeping for
// coupled_tabular.
LearnerState algorithm_round(const Instance& inst, const AlgorithmId& id, LearnerState state,
                             std::uint64_t seed, const RoundSteps& steps);

}  // namespace affpcl
