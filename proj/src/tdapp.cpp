#include "affpcl/tdapp.hpp"

#include <cmath>

#include "affpcl/errors.hpp"

namespace affpcl {

namespace {

Matrix random_stochastic(Stream& rng, std::size_t states) {
    Matrix p(states, states);
    for (std::size_t r = 0; r < states; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < states; ++c) total += p(r, c) = rng.uniform();
        for (std::size_t c = 0; c < states; ++c) p(r, c) /= total;
    }
    return p;
}

}  // namespace

Vector stationary_distribution(const Matrix& p) {
    const std::size_t s = p.rows();
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Matrix m = p.transpose();
    for (std::size_t k = 0; k < s; ++k) m(k, k) -= 1.0;
    for (std::size_t c = 0; c < s; ++c) m(s - 1, c) = 1.0;
    Vector rhs(s);
    rhs[s - 1] = 1.0;
    Vector pi = solve_linear(m, rhs);
    for (std::size_t k = 0; k < s; ++k) {
        if (pi[k] < -1e-12) throw SingularMatrix("stationary distribution has negative mass");
        pi[k] = std::max(pi[k], 0.0);
    }
    return pi;
}

MrpInstance generate_mrp(std::size_t n, std::size_t states, std::size_t d, double gamma,
                         double delta_kernel, double delta_reward, std::uint64_t seed) {
    if (states < 2) throw InvalidConfig("MRP needs at least 2 states");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidConfig("gamma must lie in [0,1)");
    if (!(delta_kernel >= 0.0 && delta_kernel <= 1.0)) throw InvalidConfig("delta_kernel must lie in [0,1]");
    if (d < 1 || d > states) throw InvalidConfig("MRP feature dimension must lie in [1, S]");
    const std::size_t pairs = states * states;
    for (std::uint64_t attempt = 0; attempt < 20; ++attempt) {
        Stream rng(seed, "mrp", attempt);
        MrpInstance mrp;
        mrp.n = n;
        mrp.states = states;
        mrp.gamma = gamma;
        for (std::size_t o = 0; o < states; ++o) mrp.features.push_back(rng.unit_vector(d));
        const Matrix p_base = random_stochastic(rng, states);
        const Vector r_base = rng.normal_vector(pairs);
        for (std::size_t i = 0; i < n; ++i) {
            Matrix p = (1.0 - delta_kernel) * p_base;
            p.axpy(delta_kernel, random_stochastic(rng, states));
            for (std::size_t r = 0; r < states; ++r) {
                double total = 0.0;
                for (std::size_t c = 0; c < states; ++c) total += p(r, c);
                for (std::size_t c = 0; c < states; ++c) p(r, c) /= total;
            }
            mrp.transitions.push_back(std::move(p));
            Vector reward = r_base;
            reward.axpy(delta_reward, rng.unit_vector(pairs));
            mrp.rewards.push_back(std::move(reward));
        }
        try {
            for (const auto& p : mrp.transitions) mrp.stationary.push_back(stationary_distribution(p));
            return mrp;
        } catch (const SingularMatrix&) {
        }
    }
    throw GenerationFailed("no MRP with well-defined stationary distributions after 20 attempts");
}

Observation bellman_observation(const MrpInstance& mrp, std::size_t agent, std::size_t from,
                                std::size_t to) {
    return mrp_observation(mrp, agent, mrp.rewards.at(agent), State{from * mrp.states + to, {}});
}

SystemMeans td_means(const MrpInstance& mrp, std::size_t agent) {
    const std::size_t states = mrp.states;
    const std::size_t pairs = states * states;
    const std::size_t d = mrp.dim();
    const Matrix& p = mrp.transitions.at(agent);
    const Vector& pi = mrp.stationary.at(agent);
    const Vector& reward = mrp.rewards.at(agent);
    SystemMeans m{Matrix(d, d), Matrix(pairs, pairs), Vector(d), Vector(pairs)};
    for (std::size_t o = 0; o < states; ++o) {
        Vector next(d);
        double mean_reward = 0.0;
        for (std::size_t q = 0; q < states; ++q) {
            next.axpy(p(o, q), mrp.features[q]);
            mean_reward += p(o, q) * reward[o * states + q];
            const double mass = pi[o] * p(o, q);
            m.phibar(o * states + q, o * states + q) = mass;
            m.ybar[o * states + q] = mass * reward[o * states + q];
        }
        m.abar.axpy(pi[o], Matrix::outer(mrp.features[o], mrp.features[o] - mrp.gamma * next));
        m.bbar.axpy(pi[o] * mean_reward, mrp.features[o]);
    }
    return m;
}

Vector td_reference(const MrpInstance& mrp, std::size_t agent) {
    const SystemMeans m = td_means(mrp, agent);
    return solve_linear(m.abar, m.bbar);
}

Instance build_mrp_instance(const InstanceConfig& cfg, MrpInstance mrp) {
    const std::size_t states = mrp.states;
    Instance inst;
    inst.config = cfg;
    inst.config.n = mrp.n;
    inst.config.d = mrp.dim();
    inst.config.family = Family::mrp;
    inst.config.tabular_size = states;
    inst.config.gamma = mrp.gamma;
    MrpEnv env;
    for (std::size_t i = 0; i < mrp.n; ++i) {
        Vector mu(states * states);
        for (std::size_t o = 0; o < states; ++o)
            for (std::size_t q = 0; q < states; ++q)
                mu[o * states + q] = mrp.stationary[i][o] * mrp.transitions[i](o, q);
        env.probs.push_back(std::move(mu));
        inst.means.push_back(td_means(mrp, i));
        inst.theta_star.push_back(mrp.rewards[i]);
    }
    env.mrp = std::move(mrp);
    inst.env = std::move(env);
    finalize_instance(inst);
    return inst;
}

Instance generate_mrp_instance(const InstanceConfig& cfg) {
    validate(cfg);
    if (cfg.family != Family::mrp) throw InvalidConfig("expected an mrp family config");
    return build_mrp_instance(cfg, generate_mrp(cfg.n, cfg.tabular_size, cfg.d, cfg.gamma, cfg.delta_env,
                                                cfg.delta_obj, derive_seed(cfg.seed, "mrp-instance")));
}

}  // namespace affpcl
