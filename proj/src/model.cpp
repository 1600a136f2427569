#include "affpcl/model.hpp"

#include <cmath>
#include <sstream>

#include "affpcl/environments.hpp"
#include "affpcl/errors.hpp"

namespace affpcl {

namespace {

constexpr int kMaxAttempts = 20;
constexpr double kMinLambda = 1e-6;

bool lambdas_positive(const Lambdas& l) {
    return l.min_agent > kMinLambda && l.central > kMinLambda && l.objective > kMinLambda;
}

void check_parts_sizes(std::size_t n, std::size_t got, const char* what) {
    if (got != n) {
        std::ostringstream msg;
        msg << "expected " << n << " " << what << ", got " << got;
        throw InvalidConfig(msg.str());
    }
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::tabular: return "tabular";
        case Family::mrp: return "mrp";
    }
    return "unknown";
}

Family family_from_string(const std::string& name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "tabular") return Family::tabular;
    if (name == "mrp") return Family::mrp;
    throw InvalidConfig("unknown family '" + name + "'");
}

void validate(const InstanceConfig& cfg) {
    if (cfg.n < 1) throw InvalidConfig("n must be >= 1");
    if (cfg.d < 1) throw InvalidConfig("d must be >= 1");
    if (!(cfg.delta_env >= 0.0 && cfg.delta_env <= 1.0))
        throw InvalidConfig("delta_env must lie in [0,1]");
    if (!(cfg.delta_obj >= 0.0)) throw InvalidConfig("delta_obj must be >= 0");
    if (!(cfg.eps_a >= 0.0) || !(cfg.eps_b >= 0.0)) throw InvalidConfig("noise scales must be >= 0");
    if (!(cfg.base_scale > 0.0)) throw InvalidConfig("base_scale must be > 0");
    if (cfg.family == Family::tabular && cfg.tabular_size < 2 * cfg.n)
        throw InvalidConfig("tabular_size must be >= 2n so agents get disjoint state blocks");
    if (cfg.family == Family::mrp) {
        if (cfg.tabular_size < 2) throw InvalidConfig("MRP needs at least 2 states");
        if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw InvalidConfig("gamma must lie in [0,1)");
    }
}

const std::vector<Vector>& Instance::finite_probs() const {
    if (const auto* t = std::get_if<TabularEnv>(&env)) return t->probs;
    if (const auto* m = std::get_if<MrpEnv>(&env)) return m->probs;
    throw UnsupportedFamily("Gaussian environments have no finite state distribution");
}

std::size_t Instance::state_count() const { return finite_probs().front().size(); }

Matrix random_pd_matrix(Stream& rng, std::size_t d, double scale) {
    const Matrix q = qr_orthogonal(rng.normal_matrix(d, d));
    Vector spectrum(d);
    for (double& e : spectrum) e = rng.uniform(scale, 2.0 * scale);
    return sym(q * Matrix::diagonal(spectrum) * q.transpose());
}

void finalize_instance(Instance& inst) {
    const std::size_t n = inst.means.size();
    if (n == 0) throw InvalidConfig("instance has no agents");
    SystemMeans agg = inst.means.front();
    for (std::size_t i = 1; i < n; ++i) {
        agg.abar += inst.means[i].abar;
        agg.phibar += inst.means[i].phibar;
        agg.bbar += inst.means[i].bbar;
        agg.ybar += inst.means[i].ybar;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    agg.abar *= inv_n;
    agg.phibar *= inv_n;
    agg.bbar *= inv_n;
    agg.ybar *= inv_n;
    inst.aggregate = std::move(agg);

    inst.x_star.clear();
    inst.lambdas = {};
    inst.lambdas.min_agent = std::numeric_limits<double>::infinity();
    for (const auto& m : inst.means) {
        inst.x_star.push_back(solve_linear(m.abar, m.bbar));
        const double lam = sym_min_eig(m.abar);
        inst.lambdas.agent.push_back(lam);
        inst.lambdas.min_agent = std::min(inst.lambdas.min_agent, lam);
    }
    inst.x_star_c = solve_linear(inst.aggregate.abar, inst.aggregate.bbar);
    inst.theta_star_c = solve_linear(inst.aggregate.phibar, inst.aggregate.ybar);
    inst.lambdas.central = sym_min_eig(inst.aggregate.abar);
    inst.lambdas.objective = sym_min_eig(inst.aggregate.phibar);
}

Instance build_gaussian_instance(const InstanceConfig& cfg, GaussianParts parts) {
    const std::size_t n = parts.means.size();
    check_parts_sizes(n, parts.thetas.size(), "objective weights");
    const std::size_t d = parts.a_base.rows();
    const Matrix id = Matrix::identity(d);

    Instance inst;
    inst.config = cfg;
    inst.config.n = n;
    inst.config.d = d;
    inst.config.family = Family::gaussian;
    for (std::size_t i = 0; i < n; ++i) {
        // E[s s^T] = m m^T + I under N(m, I).
        Matrix second = Matrix::outer(parts.means[i], parts.means[i]) + id;
        SystemMeans m;
        m.abar = (id + cfg.eps_a * second) * parts.a_base;
        m.phibar = (id + cfg.eps_b * second) * parts.phi_base;
        m.bbar = m.phibar * parts.thetas[i];
        m.ybar = m.bbar;
        inst.means.push_back(std::move(m));
    }
    inst.theta_star = std::move(parts.thetas);
    inst.env = GaussianEnv{std::move(parts.means), std::move(parts.a_base), std::move(parts.phi_base)};
    finalize_instance(inst);
    return inst;
}

Instance generate_gaussian_instance(const InstanceConfig& cfg) {
    validate(cfg);
    if (cfg.family != Family::gaussian) throw InvalidConfig("expected a gaussian family config");
    const std::size_t n = cfg.n;
    const std::size_t d = cfg.d;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Stream rng(cfg.seed, "gaussian-instance", static_cast<std::uint64_t>(attempt));
        GaussianParts parts;
        parts.a_base = random_pd_matrix(rng, d, cfg.base_scale);
        parts.phi_base = random_pd_matrix(rng, d, cfg.base_scale);
        const Vector theta_base = rng.normal_vector(d);
        // Agent 0 sits at the center: mu = N(0, I), theta = theta_base.
        parts.means.push_back(Vector::zeros(d));
        parts.thetas.push_back(theta_base);
        for (std::size_t i = 1; i < n; ++i) {
            const Vector v = rng.unit_vector(d);
            const Vector u = rng.unit_vector(d);
            parts.means.push_back((cfg.delta_env * cfg.c_a) * v);
            parts.thetas.push_back(theta_base + cfg.delta_obj * u);
        }
        try {
            Instance inst = build_gaussian_instance(cfg, std::move(parts));
            if (lambdas_positive(inst.lambdas)) return inst;
        } catch (const SingularMatrix&) {
            // regenerate
        }
    }
    throw GenerationFailed("no instance with positive lambda after 20 attempts");
}

Instance build_tabular_instance(const InstanceConfig& cfg, TabularParts parts) {
    const std::size_t n = parts.probs.size();
    check_parts_sizes(n, parts.thetas.size(), "objective weights");
    const std::size_t states = parts.a_diag.size();
    check_parts_sizes(states, parts.phi_diag.size(), "phi diagonals");
    const std::size_t d = parts.a_diag.front().size();

    Instance inst;
    inst.config = cfg;
    inst.config.n = n;
    inst.config.d = d;
    inst.config.family = Family::tabular;
    inst.config.tabular_size = states;
    for (std::size_t i = 0; i < n; ++i) {
        check_parts_sizes(states, parts.probs[i].size(), "state probabilities");
        Vector a(d), phi(d);
        for (std::size_t s = 0; s < states; ++s) {
            a.axpy(parts.probs[i][s], parts.a_diag[s]);
            phi.axpy(parts.probs[i][s], parts.phi_diag[s]);
        }
        SystemMeans m;
        m.abar = Matrix::diagonal(a);
        m.phibar = Matrix::diagonal(phi);
        m.bbar = m.phibar * parts.thetas[i];
        m.ybar = m.bbar;
        inst.means.push_back(std::move(m));
    }
    inst.theta_star = std::move(parts.thetas);
    inst.env = TabularEnv{std::move(parts.probs), std::move(parts.a_diag), std::move(parts.phi_diag)};
    finalize_instance(inst);
    return inst;
}

Instance generate_tabular_instance(const InstanceConfig& cfg) {
    validate(cfg);
    if (cfg.family != Family::tabular) throw InvalidConfig("expected a tabular family config");
    const std::size_t n = cfg.n;
    const std::size_t d = cfg.d;
    const std::size_t states = cfg.tabular_size;
    const std::size_t block = states / n;
    const double base = 1.0 / static_cast<double>(states);

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Stream rng(cfg.seed, "tabular-instance", static_cast<std::uint64_t>(attempt));
        TabularParts parts;
        for (std::size_t s = 0; s < states; ++s) {
            Vector a(d), phi(d);
            for (double& x : a) x = rng.uniform(cfg.base_scale, 2.0 * cfg.base_scale);
            for (double& x : phi) x = rng.uniform(cfg.base_scale, 2.0 * cfg.base_scale);
            parts.a_diag.push_back(std::move(a));
            parts.phi_diag.push_back(std::move(phi));
        }
        const Vector theta_base = rng.normal_vector(d);
        for (std::size_t i = 0; i < n; ++i) {
            // Agent-private block [i*block, (i+1)*block) carries the
            // perturbation, so pairwise TV is exactly delta_env.
            Vector private_part(states);
            double total = 0.0;
            for (std::size_t s = i * block; s < (i + 1) * block; ++s) {
                private_part[s] = rng.uniform(0.5, 1.5);
                total += private_part[s];
            }
            Vector probs(states);
            for (std::size_t s = 0; s < states; ++s)
                probs[s] = (1.0 - cfg.delta_env) * base + cfg.delta_env * private_part[s] / total;
            parts.probs.push_back(std::move(probs));
            if (i == 0) {
                parts.thetas.push_back(theta_base);
            } else {
                parts.thetas.push_back(theta_base + cfg.delta_obj * rng.unit_vector(d));
            }
        }
        try {
            Instance inst = build_tabular_instance(cfg, std::move(parts));
            if (lambdas_positive(inst.lambdas)) return inst;
        } catch (const SingularMatrix&) {
        }
    }
    throw GenerationFailed("no tabular instance with positive lambda after 20 attempts");
}

const SystemMeans& analytic_means(const Instance& inst, std::size_t agent) {
    if (agent == kAggregate) return inst.aggregate;
    return inst.means.at(agent);
}

namespace {

struct MeanAccumulator {
    Matrix a;
    Vector b;
    explicit MeanAccumulator(std::size_t d) : a(d, d), b(d) {}
    void add(double w, const Observation& o) {
        a.axpy(w, o.a);
        b.axpy(w, o.b);
    }
};

// Estimated (or, for finite families, enumerated) E A and E b for one agent.
MeanAccumulator empirical_means(const Instance& inst, std::size_t agent, const ReferenceMode& mode) {
    MeanAccumulator acc(inst.dim());
    if (inst.is_finite()) {
        const Vector& probs = inst.finite_probs()[agent];
        for (std::size_t s = 0; s < probs.size(); ++s) {
            if (probs[s] == 0.0) continue;
            acc.add(probs[s], observe(inst, agent, State{s, {}}));
        }
        return acc;
    }
    if (mode.samples < 1) throw InvalidConfig("monte_carlo reference needs samples >= 1");
    Stream rng(mode.seed ^ inst.config.seed, "reference", agent);
    const double w = 1.0 / static_cast<double>(mode.samples);
    for (std::size_t k = 0; k < mode.samples; ++k)
        acc.add(w, observe(inst, agent, sample_state(inst, agent, rng)));
    return acc;
}

}  // namespace

Vector reference_solution(const Instance& inst, std::size_t agent, const ReferenceMode& mode) {
    if (mode.kind == ReferenceMode::Kind::analytic) {
        const SystemMeans& m = analytic_means(inst, agent);
        return solve_linear(m.abar, m.bbar);
    }
    if (agent != kAggregate) {
        const auto acc = empirical_means(inst, agent, mode);
        return solve_linear(acc.a, acc.b);
    }
    MeanAccumulator total(inst.dim());
    const double inv_n = 1.0 / static_cast<double>(inst.n());
    for (std::size_t i = 0; i < inst.n(); ++i) {
        const auto acc = empirical_means(inst, i, mode);
        total.a.axpy(inv_n, acc.a);
        total.b.axpy(inv_n, acc.b);
    }
    return solve_linear(total.a, total.b);
}

}  // namespace affpcl
