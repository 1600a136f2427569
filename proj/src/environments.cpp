#include "affpcl/environments.hpp"

#include <algorithm>
#include <cmath>

#include "affpcl/errors.hpp"

namespace affpcl {

namespace {

// (I + eps s s^T) base, without forming the outer product.
Matrix multiplicative(const Matrix& base, const Vector& s, double eps) {
    Matrix out = base;
    if (eps == 0.0) return out;
    const std::size_t d = base.rows();
    Vector row(d);  // s^T base
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < d; ++j) row[j] += s[k] * base(k, j);
    for (std::size_t i = 0; i < d; ++i) {
        const double si = eps * s[i];
        for (std::size_t j = 0; j < d; ++j) out(i, j) += si * row[j];
    }
    return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

// Uniform mixture of the finite distributions.
Vector mixture_of(const std::vector<Vector>& probs) {
    Vector mix(probs.front().size());
    for (const auto& p : probs) mix += p;
    mix *= 1.0 / static_cast<double>(probs.size());
    return mix;
}

const Vector& finite_row(const std::vector<Vector>& probs, const Vector& mixture, std::size_t who) {
    return who == kAggregate ? mixture : probs.at(who);
}

std::vector<double> gaussian_ratios(const GaussianEnv& env, const Vector& s) {
    const std::size_t n = env.means.size();
    std::vector<double> logp(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        logp[k] = -0.5 * (s - env.means[k]).squared_norm();
        top = std::max(top, logp[k]);
    }
    // log mu^0(s) via log-sum-exp; far-apart means underflow otherwise.
    double acc = 0.0;
    for (double lp : logp) acc += std::exp(lp - top);
    const double log_mix = top + std::log(acc / static_cast<double>(n));
    std::vector<double> ratios(n);
    for (std::size_t k = 0; k < n; ++k) ratios[k] = std::exp(logp[k] - log_mix);
    return ratios;
}

}  // namespace

Vector Observation::lift_objective(const Vector& v) const {
    if (lift.rows() == 0) return v;
    return lift * v;
}

State sample_state(const Instance& inst, std::size_t agent, Stream& rng) {
    if (const auto* g = std::get_if<GaussianEnv>(&inst.env)) {
        Vector s = rng.normal_vector(inst.dim());
        s += g->means.at(agent);
        return State{0, std::move(s)};
    }
    const Vector& probs = inst.finite_probs().at(agent);
    return State{rng.categorical(probs.values()), {}};
}

Observation mrp_observation(const MrpInstance& mrp, std::size_t agent, const Vector& rewards,
                            const State& state) {
    Observation o;
    o.agent = agent;
    o.state = state;
    const std::size_t states = mrp.states;
    const std::size_t pairs = states * states;
    const std::size_t from = state.index / states;
    const std::size_t to = state.index % states;
    const Vector& phi_from = mrp.features[from];
    const Vector& phi_to = mrp.features[to];
    o.a = Matrix::outer(phi_from, phi_from - mrp.gamma * phi_to);
    const double reward = rewards[state.index];
    o.b = reward * phi_from;
    o.phi = Matrix(pairs, pairs);
    o.phi(state.index, state.index) = 1.0;
    o.y = Vector(pairs);
    o.y[state.index] = reward;
    o.lift = Matrix(mrp.dim(), pairs);
    for (std::size_t r = 0; r < mrp.dim(); ++r) o.lift(r, state.index) = phi_from[r];
    o.psi = Vector::unit(pairs, state.index);
    return o;
}

Observation observe(const Instance& inst, std::size_t agent, const State& state) {
    Observation o;
    o.agent = agent;
    o.state = state;
    const Vector& theta = inst.theta_star.at(agent);
    if (const auto* g = std::get_if<GaussianEnv>(&inst.env)) {
        o.a = multiplicative(g->a_base, state.point, inst.config.eps_a);
        o.phi = multiplicative(g->phi_base, state.point, inst.config.eps_b);
        o.b = o.phi * theta;
        o.y = o.b;
    } else if (const auto* t = std::get_if<TabularEnv>(&inst.env)) {
        o.a = Matrix::diagonal(t->a_diag.at(state.index));
        o.phi = Matrix::diagonal(t->phi_diag.at(state.index));
        o.b = hadamard(t->phi_diag[state.index], theta);
        o.y = o.b;
        o.psi = Vector::unit(t->a_diag.size(), state.index);
    } else {
        return mrp_observation(std::get<MrpEnv>(inst.env).mrp, agent, theta, state);
    }
    return o;
}

Vector objective_at(const Instance& inst, std::size_t agent, const State& state) {
    const Vector& theta = inst.theta_star.at(agent);
    if (const auto* g = std::get_if<GaussianEnv>(&inst.env)) {
        Vector base = g->phi_base * theta;
        return base.axpy(inst.config.eps_b * state.point.dot(base), state.point);
    }
    if (const auto* t = std::get_if<TabularEnv>(&inst.env))
        return hadamard(t->phi_diag.at(state.index), theta);
    const auto& mrp = std::get<MrpEnv>(inst.env).mrp;
    return theta[state.index] * mrp.features[state.index / mrp.states];
}

std::vector<double> density_ratios(const Instance& inst, const State& state) {
    if (const auto* g = std::get_if<GaussianEnv>(&inst.env)) return gaussian_ratios(*g, state.point);
    const auto& probs = inst.finite_probs();
    const std::size_t n = probs.size();
    double mix = 0.0;
    for (const auto& p : probs) mix += p[state.index];
    mix /= static_cast<double>(n);
    std::vector<double> ratios(n, 0.0);
    if (mix == 0.0) return ratios;  // 0/0 := 0
    for (std::size_t k = 0; k < n; ++k) ratios[k] = probs[k][state.index] / mix;
    return ratios;
}

double density_ratio(const Instance& inst, std::size_t agent, const State& state) {
    return density_ratios(inst, state).at(agent);
}

std::vector<std::vector<double>> exact_ratio_table(const Instance& inst,
                                                   const std::vector<Observation>& obs) {
    const std::size_t n = inst.n();
    std::vector<std::vector<double>> rho(n, std::vector<double>(obs.size()));
    for (std::size_t j = 0; j < obs.size(); ++j) {
        const auto r = density_ratios(inst, obs[j].state);
        for (std::size_t i = 0; i < n; ++i) rho[i][j] = r[i];
    }
    return rho;
}

double gaussian_tv(const Vector& mean_i, const Vector& mean_j) {
    const double gap = (mean_i - mean_j).norm();
    // 2 Phi(gap/2) - 1 == erf(gap / (2 sqrt 2))
    return std::erf(gap / (2.0 * std::sqrt(2.0)));
}

TvEstimate mixture_tv(const Instance& inst, std::size_t samples, std::uint64_t seed) {
    const std::size_t n = inst.n();
    TvEstimate out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    if (inst.is_finite()) {
        const auto& probs = inst.finite_probs();
        const Vector mix = mixture_of(probs);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t s = 0; s < mix.size(); ++s) acc += std::abs(probs[i][s] - mix[s]);
            out.value[i] = 0.5 * acc;
        }
        return out;
    }
    if (n == 1) return out;
    const auto& env = std::get<GaussianEnv>(inst.env);
    const std::size_t per_stratum = std::max<std::size_t>(2, (samples + n - 1) / n);
    // Stratified over the mixture components: E_{mu^0} f = mean_k E_{mu^k} f.
    std::vector<double> var_sum(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        Stream rng(seed, "mixture-tv", k);
        std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
        for (std::size_t m = 0; m < per_stratum; ++m) {
            Vector s = rng.normal_vector(inst.dim());
            s += env.means[k];
            const auto ratios = gaussian_ratios(env, s);
            for (std::size_t i = 0; i < n; ++i) {
                const double f = std::max(ratios[i] - 1.0, 0.0);
                sum[i] += f;
                sum_sq[i] += f * f;
            }
        }
        const double cnt = static_cast<double>(per_stratum);
        for (std::size_t i = 0; i < n; ++i) {
            const double mean = sum[i] / cnt;
            const double var = std::max(sum_sq[i] / cnt - mean * mean, 0.0) * cnt / (cnt - 1.0);
            out.value[i] += mean / static_cast<double>(n);
            var_sum[i] += var / cnt;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.value[i] = std::clamp(out.value[i], 0.0, 1.0);
        out.standard_error[i] = std::sqrt(var_sum[i]) / static_cast<double>(n);
    }
    return out;
}

double tv_distance(const Instance& inst, std::size_t i, std::size_t j) {
    if (i == j) return 0.0;
    if (inst.is_finite()) {
        const auto& probs = inst.finite_probs();
        const Vector mix = mixture_of(probs);
        const Vector& p = finite_row(probs, mix, i);
        const Vector& q = finite_row(probs, mix, j);
        double acc = 0.0;
        for (std::size_t s = 0; s < p.size(); ++s) acc += std::abs(p[s] - q[s]);
        return std::min(1.0, 0.5 * acc);
    }
    const auto& env = std::get<GaussianEnv>(inst.env);
    if (i != kAggregate && j != kAggregate) return gaussian_tv(env.means.at(i), env.means.at(j));
    const std::size_t agent = i == kAggregate ? j : i;
    return mixture_tv(inst, 100000, derive_seed(inst.config.seed, "tv-distance")).value.at(agent);
}

CoupledDraw coupled_sample(const Instance& inst, std::size_t agent, Stream& rng) {
    if (!inst.is_finite()) throw UnsupportedFamily("coupled sampling needs a finite state space");
    const auto& probs = inst.finite_probs();
    const Vector& p = probs.at(agent);
    const Vector mix = mixture_of(probs);
    const std::size_t states = p.size();
    std::vector<double> overlap(states), rest_p(states), rest_q(states);
    double common = 0.0;
    for (std::size_t s = 0; s < states; ++s) {
        overlap[s] = std::min(p[s], mix[s]);
        rest_p[s] = std::max(p[s] - overlap[s], 0.0);
        rest_q[s] = std::max(mix[s] - overlap[s], 0.0);
        common += overlap[s];
    }
    CoupledDraw draw;
    const double u = rng.uniform();
    if (u < common || common >= 1.0 - 1e-12) {
        const std::size_t s = rng.categorical(overlap);
        draw.agent_state = State{s, {}};
        draw.mixture_state = State{s, {}};
        draw.coupled = true;
    } else {
        draw.agent_state = State{rng.categorical(rest_p), {}};
        draw.mixture_state = State{rng.categorical(rest_q), {}};
        draw.coupled = false;
    }
    return draw;
}

}  // namespace affpcl
