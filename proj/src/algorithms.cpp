#include "affpcl/algorithms.hpp"

#include <algorithm>

#include "affpcl/errors.hpp"

namespace affpcl {

std::string to_string(AlgorithmKind k) {
    switch (k) {
        case AlgorithmKind::independent: return "independent";
        case AlgorithmKind::fedavg: return "fedavg";
        case AlgorithmKind::affpcl_known: return "affpcl_known";
        case AlgorithmKind::affpcl_full: return "affpcl_full";
    }
    return "unknown";
}

std::string to_string(CdlVariant v) { return v == CdlVariant::v1 ? "v1" : "v2"; }

std::string to_string(DreMode m) {
    switch (m) {
        case DreMode::exact: return "exact";
        case DreMode::coupled_tabular: return "coupled_tabular";
        case DreMode::oracle_off: return "oracle_off";
    }
    return "unknown";
}

AlgorithmKind algorithm_kind_from_string(const std::string& name) {
    if (name == "independent") return AlgorithmKind::independent;
    if (name == "fedavg") return AlgorithmKind::fedavg;
    if (name == "affpcl_known") return AlgorithmKind::affpcl_known;
    if (name == "affpcl_full" || name == "affpcl") return AlgorithmKind::affpcl_full;
    throw InvalidConfig("unknown algorithm '" + name + "'");
}

CdlVariant cdl_variant_from_string(const std::string& name) {
    if (name == "v1") return CdlVariant::v1;
    if (name == "v2") return CdlVariant::v2;
    throw InvalidConfig("unknown cdl_variant '" + name + "'");
}

DreMode dre_mode_from_string(const std::string& name) {
    if (name == "exact") return DreMode::exact;
    if (name == "coupled_tabular") return DreMode::coupled_tabular;
    if (name == "oracle_off") return DreMode::oracle_off;
    throw InvalidConfig("unknown dre_mode '" + name + "'");
}

void check_compatible(const AlgorithmId& id, const Instance& inst) {
    if (id.kind == AlgorithmKind::affpcl_known && inst.config.delta_env > 0.0)
        throw HeterogeneousEnvironment("affpcl_known needs delta_env = 0");
    if (id.kind == AlgorithmKind::affpcl_full && id.dre == DreMode::coupled_tabular && !inst.is_finite())
        throw UnsupportedFamily("coupled_tabular DRE needs a finite state space");
}

LearnerState LearnerState::zeros(std::size_t n, std::size_t d, std::size_t p) {
    LearnerState s;
    s.x.assign(n, Vector(d));
    s.x_c = Vector(d);
    s.theta_c = Vector(p);
    s.x_avg = Vector(d);
    return s;
}

LearnerState LearnerState::zeros(const Instance& inst) {
    return zeros(inst.n(), inst.dim(), inst.objective_dim());
}

void LearnerState::refresh_average() {
    Vector avg(x.front().size());
    for (const auto& xi : x) avg += xi;
    avg *= 1.0 / static_cast<double>(x.size());
    x_avg = std::move(avg);
}

Vector residual(const Observation& obs, const Vector& x) { return obs.a * x - obs.b; }

Vector estimated_residual(const Observation& obs, const Vector& x, const Vector& theta) {
    return obs.a * x - obs.objective_for(theta);
}

std::vector<std::vector<double>> estimated_ratio_table(const std::vector<Vector>& eta,
                                                       const std::vector<Observation>& obs) {
    const std::size_t n = eta.size();
    const double cap = static_cast<double>(n);
    std::vector<std::vector<double>> rho(n, std::vector<double>(obs.size()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < obs.size(); ++j)
            rho[i][j] = std::clamp(1.0 + eta[i][obs[j].state.index], 0.0, cap);
    return rho;
}

RoundBatch make_batch(const Instance& inst, std::uint64_t seed, std::size_t t,
                      const BatchOptions& opts, const LearnerState* state) {
    RoundBatch batch;
    batch.t = t;
    batch.obs.reserve(inst.n());
    for (std::size_t j = 0; j < inst.n(); ++j) {
        Stream rng(seed, "sample", j, t);
        batch.obs.push_back(observe(inst, j, sample_state(inst, j, rng)));
    }
    if (!opts.ratios) return batch;
    if (opts.dre == DreMode::exact) {
        batch.rho = exact_ratio_table(inst, batch.obs);
        return batch;
    }
    if (state == nullptr || !state->eta)
        throw MissingDensityRatio("no density-ratio estimate available for round " + std::to_string(t));
    batch.rho = estimated_ratio_table(*state->eta, batch.obs);
    return batch;
}

namespace {

// (1/n) sum_j of the per-sample vectors, summed in agent order.
template <class F>
Vector average_over(std::size_t n, std::size_t dim, F&& term) {
    Vector acc(dim);
    for (std::size_t j = 0; j < n; ++j) acc += term(j);
    acc *= 1.0 / static_cast<double>(n);
    return acc;
}

Vector fedavg_direction(const RoundBatch& batch, const Vector& x_c) {
    return average_over(batch.obs.size(), x_c.size(),
                        [&](std::size_t j) { return residual(batch.obs[j], x_c); });
}

Vector cdl_direction(const RoundBatch& batch, const Vector& x_c, const Vector& theta_c,
                     CdlVariant variant) {
    if (variant == CdlVariant::v1) return fedavg_direction(batch, x_c);
    return average_over(batch.obs.size(), x_c.size(), [&](std::size_t j) {
        return estimated_residual(batch.obs[j], x_c, theta_c);
    });
}

Vector coe_direction(const RoundBatch& batch, const Vector& theta_c) {
    return average_over(batch.obs.size(), theta_c.size(), [&](std::size_t j) {
        const Observation& o = batch.obs[j];
        return o.phi * theta_c - o.y;
    });
}

}  // namespace

LearnerState independent_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps) {
    for (std::size_t i = 0; i < state.x.size(); ++i)
        state.x[i].axpy(-steps.agent(i), residual(batch.obs[i], state.x[i]));
    state.refresh_average();
    ++state.t;
    return state;
}

LearnerState fedavg_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps) {
    state.x_c.axpy(-steps.central, fedavg_direction(batch, state.x_c));
    for (auto& xi : state.x) xi = state.x_c;
    state.x_avg = state.x_c;
    ++state.t;
    return state;
}

LearnerState coe_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps) {
    state.theta_c.axpy(-steps.objective, coe_direction(batch, state.theta_c));
    ++state.t;
    return state;
}

LearnerState cdl_step(LearnerState state, const RoundBatch& batch, const RoundSteps& steps,
                      CdlVariant variant) {
    state.x_c.axpy(-steps.central, cdl_direction(batch, state.x_c, state.theta_c, variant));
    ++state.t;
    return state;
}

LearnerState affpcl_known_step(const Instance& inst, LearnerState state, const RoundBatch& batch,
                               const RoundSteps& steps) {
    if (inst.config.delta_env > 0.0)
        throw HeterogeneousEnvironment("affpcl_known needs delta_env = 0");
    const std::size_t n = state.x.size();
    const Vector x_avg = state.x_avg;
    const Vector central = fedavg_direction(batch, x_avg);
    for (std::size_t i = 0; i < n; ++i) {
        const Observation& o = batch.obs[i];
        // b^0 at agent i's sample: the average objective over agents.
        const Vector b0 = average_over(n, x_avg.size(), [&](std::size_t j) {
            return objective_at(inst, j, o.state);
        });
        Vector dir = residual(o, state.x[i]);
        dir += central;
        dir -= o.a * x_avg - b0;
        state.x[i].axpy(-steps.agent(i), dir);
    }
    state.refresh_average();
    ++state.t;
    return state;
}

Vector importance_corrected_direction(std::size_t i, const RoundBatch& batch, const Vector& x_c,
                                      const Vector& theta_c) {
    return average_over(batch.obs.size(), x_c.size(), [&](std::size_t j) {
        return batch.rho.at(i).at(j) * estimated_residual(batch.obs[j], x_c, theta_c);
    });
}

LearnerState affpcl_full_round(LearnerState state, const RoundBatch& batch, const RoundSteps& steps,
                               CdlVariant variant) {
    const std::size_t n = state.x.size();
    if (batch.rho.size() != n) throw MissingDensityRatio("round batch has no ratio table");
    const Vector& x_c = state.x_c;
    const Vector& theta_c = state.theta_c;

    std::vector<Vector> central(n);
    for (std::size_t j = 0; j < n; ++j) central[j] = estimated_residual(batch.obs[j], x_c, theta_c);

    std::vector<Vector> next_x(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vector corrected(x_c.size());
        for (std::size_t j = 0; j < n; ++j) corrected.axpy(batch.rho[i][j], central[j]);
        corrected *= 1.0 / static_cast<double>(n);
        Vector dir = residual(batch.obs[i], state.x[i]);
        dir += corrected - central[i];
        next_x[i] = state.x[i];
        next_x[i].axpy(-steps.agent(i), dir);
    }
    Vector next_x_c = x_c;
    next_x_c.axpy(-steps.central, cdl_direction(batch, x_c, theta_c, variant));
    Vector next_theta = theta_c;
    next_theta.axpy(-steps.objective, coe_direction(batch, theta_c));

    state.x = std::move(next_x);
    state.x_c = std::move(next_x_c);
    state.theta_c = std::move(next_theta);
    state.refresh_average();
    ++state.t;
    return state;
}

Vector dre_coupled_step(Vector eta, const CoupledDraw& draw, double alpha) {
    const std::size_t s0 = draw.mixture_state.index;
    const std::size_t si = draw.agent_state.index;
    const double g0 = eta[s0];
    eta[s0] -= alpha * g0;
    eta[si] += alpha;
    eta[s0] -= alpha;
    return eta;
}

void dre_round(const Instance& inst, LearnerState& state, std::uint64_t seed, double alpha) {
    if (!state.eta) state.eta = std::vector<Vector>(inst.n(), Vector(inst.state_count()));
    for (std::size_t i = 0; i < inst.n(); ++i) {
        Stream rng(seed, "dre", i, state.t);
        (*state.eta)[i] = dre_coupled_step(std::move((*state.eta)[i]), coupled_sample(inst, i, rng), alpha);
    }
}

LearnerState algorithm_round(const Instance& inst, const AlgorithmId& id, LearnerState state,
                             std::uint64_t seed, const RoundSteps& steps) {
    const std::size_t t = state.t;
    switch (id.kind) {
        case AlgorithmKind::independent:
            return independent_step(std::move(state), make_batch(inst, seed, t, {}), steps);
        case AlgorithmKind::fedavg:
            return fedavg_step(std::move(state), make_batch(inst, seed, t, {}), steps);
        case AlgorithmKind::affpcl_known:
            return affpcl_known_step(inst, std::move(state), make_batch(inst, seed, t, {}), steps);
        case AlgorithmKind::affpcl_full: {
            if (id.dre == DreMode::coupled_tabular && !state.eta)
                state.eta = std::vector<Vector>(inst.n(), Vector(inst.state_count()));
            const RoundBatch batch = make_batch(inst, seed, t, {true, id.dre}, &state);
            LearnerState next = affpcl_full_round(std::move(state), batch, steps, id.cdl);
            if (id.dre == DreMode::coupled_tabular) {
                next.t = t;
                dre_round(inst, next, seed, steps.dre);
                next.t = t + 1;
            }
            return next;
        }
    }
    return state;
}

}  // namespace affpcl
