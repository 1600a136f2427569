#include "affpcl/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "affpcl/algorithms.hpp"
#include "affpcl/environments.hpp"
#include "affpcl/errors.hpp"
#include "affpcl/metrics.hpp"
#include "affpcl/schedules.hpp"
#include "affpcl/tdapp.hpp"

namespace affpcl {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

}  // namespace

CheckResult check_ratio_laws(const Instance& inst, std::size_t states_per_agent, std::uint64_t seed) {
    const double n = static_cast<double>(inst.n());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double worst_mean = 0.0;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        Stream rng(seed, "ratio-laws", i);
        for (std::size_t k = 0; k < states_per_agent; ++k) {
            const auto r = density_ratios(inst, sample_state(inst, i, rng));
            double sum = 0.0;
            for (double v : r) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            worst_mean = std::max(worst_mean, std::abs(sum / n - 1.0));
        }
    }
    const bool ok = lo >= 0.0 && hi <= n + 1e-9 && worst_mean <= 1e-9;
    return {"density ratio bounds and mixture identity", ok,
            fmt("min %.3g, max %.6g (n = %g), ", lo, hi, n) + fmt("max |mean_i rho - 1| = %.3g", worst_mean)};
}

CheckResult check_correction_unbiased(const Instance& inst, std::size_t frozen, std::size_t rounds,
                                      double z, std::uint64_t seed) {
    const std::size_t n = inst.n();
    const std::size_t d = inst.dim();
    Stream init(seed, "frozen");
    std::vector<std::vector<Vector>> xs(frozen);
    std::vector<Vector> xcs(frozen);
    for (std::size_t f = 0; f < frozen; ++f) {
        for (std::size_t i = 0; i < n; ++i) xs[f].push_back(init.normal_vector(d));
        xcs[f] = init.normal_vector(d);
    }
    // Running sums of the direction and its square, per frozen state, agent, coordinate.
    std::vector<std::vector<Vector>> sum(frozen, std::vector<Vector>(n, Vector(d)));
    std::vector<std::vector<Vector>> sum_sq = sum;
    const Vector& theta_c = inst.theta_star_c;
    for (std::size_t t = 0; t < rounds; ++t) {
        const RoundBatch batch = make_batch(inst, derive_seed(seed, "unbiased"), t, {true, DreMode::exact});
        for (std::size_t f = 0; f < frozen; ++f) {
            std::vector<Vector> central(n);
            for (std::size_t j = 0; j < n; ++j) central[j] = estimated_residual(batch.obs[j], xcs[f], theta_c);
            for (std::size_t i = 0; i < n; ++i) {
                Vector dir = residual(batch.obs[i], xs[f][i]);
                Vector corrected(d);
                for (std::size_t j = 0; j < n; ++j) corrected.axpy(batch.rho[i][j], central[j]);
                corrected *= 1.0 / static_cast<double>(n);
                dir += corrected - central[i];
                for (std::size_t k = 0; k < d; ++k) {
                    sum[f][i][k] += dir[k];
                    sum_sq[f][i][k] += dir[k] * dir[k];
                }
            }
        }
    }
    double worst = 0.0;
    const double m = static_cast<double>(rounds);
    for (std::size_t f = 0; f < frozen; ++f)
        for (std::size_t i = 0; i < n; ++i) {
            const Vector target = inst.means[i].abar * xs[f][i] - inst.means[i].bbar;
            for (std::size_t k = 0; k < d; ++k) {
                const double mean = sum[f][i][k] / m;
                const double var = std::max(sum_sq[f][i][k] / m - mean * mean, 0.0) * m / (m - 1.0);
                const double se = std::sqrt(var / m);
                const double score = se > 0.0 ? std::abs(mean - target[k]) / se
                                              : (std::abs(mean - target[k]) <= 1e-10 ? 0.0 : INFINITY);
                worst = std::max(worst, score);
            }
        }
    return {"correction unbiasedness", worst <= z,
            fmt("max deviation %.3f SE (limit %.1f) over %g frozen states", worst, z, static_cast<double>(frozen))};
}

CheckResult check_oracle_equivalence(const std::vector<Instance>& instances, std::size_t samples,
                                     double rel_tol) {
    double worst_cont = 0.0;
    double worst_finite = 0.0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const Instance& inst = instances[k];
        const ReferenceMode mc = ReferenceMode::monte_carlo(samples, k);
        std::vector<std::size_t> agents;
        for (std::size_t i = 0; i < inst.n(); ++i) agents.push_back(i);
        agents.push_back(kAggregate);
        for (std::size_t i : agents) {
            const Vector exact = reference_solution(inst, i, ReferenceMode::analytic());
            const Vector est = reference_solution(inst, i, mc);
            const double rel = (est - exact).norm() / std::max(exact.norm(), 1e-300);
            if (inst.is_finite()) {
                worst_finite = std::max(worst_finite, (est - exact).norm() / (1.0 + exact.norm()));
            } else {
                worst_cont = std::max(worst_cont, rel);
            }
        }
    }
    const bool ok = worst_cont <= rel_tol && worst_finite <= 1e-10;
    return {"analytic vs Monte Carlo references", ok,
            fmt("max relative error %.4f (limit %.2f), finite families %.3g", worst_cont, rel_tol, worst_finite)};
}

CheckResult check_nu_psd(std::size_t samples, std::uint64_t seed) {
    const NuEstimate nu = estimate_nu(psd_nu_model(3, seed), samples, seed);
    const bool ok = std::abs(nu.value - 1.0) <= 3.0 * nu.standard_error + 1e-12;
    return {"nu = 1 for PSD features", ok, fmt("nu_hat %.5f, SE %.5f", nu.value, nu.standard_error)};
}

CheckResult check_nu_multiplicative(double eps, std::size_t samples, std::uint64_t seed) {
    const NuEstimate nu = estimate_nu(multiplicative_nu_model(eps, 3, seed), samples, seed);
    const bool ok = nu.value <= 1.0 + eps + 3.0 * nu.standard_error;
    return {"nu <= 1 + eps for multiplicative noise", ok,
            fmt("nu_hat %.5f, SE %.5f, bound %.3f", nu.value, nu.standard_error, 1.0 + eps)};
}

CheckResult check_nu_td(double gamma, std::uint64_t seed) {
    InstanceConfig cfg;
    cfg.family = Family::mrp;
    cfg.n = 5;
    cfg.d = 3;
    cfg.tabular_size = 8;
    cfg.gamma = gamma;
    cfg.delta_env = 0.5;
    cfg.delta_obj = 0.5;
    cfg.seed = seed;
    const Instance inst = generate_mrp_instance(cfg);
    const NuEstimate nu = estimate_nu(inst, 2000, seed);
    const double bound = (1.0 + gamma) / (1.0 - gamma);
    return {"nu <= (1 + gamma) / (1 - gamma) for TD features", nu.value <= bound + 3.0 * nu.standard_error,
            fmt("nu_hat %.4f, SE %.4f, bound %.3f", nu.value, nu.standard_error, bound)};
}

DreOutcome run_coupled_dre(double delta_env, std::size_t steps, double alpha,
                           const std::vector<std::uint64_t>& seeds) {
    DreOutcome out;
    double mse_total = 0.0;
    std::size_t mse_count = 0;
    for (std::uint64_t seed : seeds) {
        InstanceConfig cfg;
        cfg.family = Family::tabular;
        cfg.n = 2;
        cfg.d = 2;
        cfg.tabular_size = 4;
        cfg.delta_env = delta_env;
        cfg.seed = derive_seed(seed, "dre-instance");
        const Instance inst = generate_tabular_instance(cfg);
        LearnerState state = LearnerState::zeros(inst);
        for (std::size_t t = 0; t < steps; ++t) {
            dre_round(inst, state, derive_seed(seed, "dre-samples"), alpha);
            ++state.t;
        }
        double seed_error = 0.0;
        const double n = static_cast<double>(inst.n());
        for (std::size_t i = 0; i < inst.n(); ++i) {
            const Vector& eta = (*state.eta)[i];
            double sq = 0.0;
            for (std::size_t s = 0; s < inst.state_count(); ++s) {
                const double rho = density_ratio(inst, i, State{s, {}});
                const double err = eta[s] - (rho - 1.0);
                sq += err * err;
                const double estimate = std::clamp(1.0 + eta[s], 0.0, n);
                seed_error = std::max(seed_error, std::abs(estimate - rho));
            }
            mse_total += sq;
            ++mse_count;
        }
        out.mean_ratio_error += seed_error / static_cast<double>(seeds.size());
        out.worst_ratio_error = std::max(out.worst_ratio_error, seed_error);
    }
    out.weight_mse = mse_total / static_cast<double>(mse_count);
    return out;
}

CheckResult check_coupled_dre(std::size_t steps, double alpha, const std::vector<std::uint64_t>& seeds) {
    const DreOutcome low = run_coupled_dre(0.1, steps, alpha, seeds);
    const DreOutcome high = run_coupled_dre(0.8, steps, alpha, seeds);
    const bool ok = low.weight_mse <= 0.5 * high.weight_mse && low.mean_ratio_error <= 0.05;
    return {"coupled density-ratio estimation", ok,
            fmt("weight MSE %.3g (delta 0.1) vs %.3g (delta 0.8), ", low.weight_mse, high.weight_mse) +
                fmt("ratio error %.4f mean over seeds, %.4f worst seed", low.mean_ratio_error,
                    low.worst_ratio_error)};
}

CheckResult check_schedule_algebra(std::size_t triples, std::uint64_t seed) {
    Stream rng(seed, "schedule-algebra");
    double worst = 0.0;
    bool weights_ok = true;
    for (std::size_t k = 0; k < triples; ++k) {
        const double tau = std::floor(rng.uniform(0.0, 1000.0));
        const double t0 = std::floor(rng.uniform(1.0, 100.0));
        const double lambda = rng.uniform(0.01, 10.0);
        const double dim = step_size(StepSchedule::diminishing(t0, lambda), tau);
        worst = std::max(worst, std::abs(dim - 4.0 / ((tau + t0 + 1.0) * lambda)) / dim);
        const double horizon = 2.0 + tau;
        const double con = step_size(StepSchedule::theory_constant(horizon, lambda), tau);
        worst = std::max(worst, std::abs(con - std::log(horizon) / (lambda * horizon)) / con);
        const auto w = tail_weights(static_cast<std::size_t>(tau) + 1, t0);
        double sum = 0.0;
        for (std::size_t q = 0; q < w.size(); ++q) {
            sum += w[q];
            if (w[q] < 0.0 || (q > 0 && w[q] + 1e-15 < w[q - 1])) weights_ok = false;
        }
        double exact = 0.0;
        for (std::size_t q = 0; q + 1 < w.size(); ++q) exact += w[q];
        if (exact + w.back() != 1.0 || std::abs(sum - 1.0) > 1e-12) weights_ok = false;
    }
    return {"schedule algebra", worst <= 1e-12 && weights_ok,
            fmt("max relative deviation %.3g, weights ", worst) + (weights_ok ? "ok" : "BAD")};
}

CheckResult check_determinism(const RunConfig& cfg, std::size_t threads) {
    const RunResult serial = run_experiment(cfg, {1, {}});
    const RunResult parallel = run_experiment(cfg, {threads, {}});
    bool same = serial.panels.size() == parallel.panels.size();
    std::size_t bytes = 0;
    for (std::size_t p = 0; same && p < serial.panels.size(); ++p) {
        const std::string a = metrics_csv_text(serial.panels[p].records);
        const std::string b = metrics_csv_text(parallel.panels[p].records);
        same = a == b;
        bytes += a.size();
    }
    return {"serial vs parallel determinism", same,
            fmt("%g bytes compared, %g workers", static_cast<double>(bytes), static_cast<double>(threads))};
}

std::vector<CheckResult> run_validation(bool quick, std::uint64_t seed) {
    std::vector<CheckResult> out;
    auto guarded = [&out](const std::string& name, const std::function<CheckResult()>& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("error: ") + e.what()});
        }
    };

    InstanceConfig g;
    g.n = quick ? 8 : 20;
    g.d = quick ? 3 : 5;
    g.delta_env = 1.0;
    g.delta_obj = 0.5;
    g.seed = seed;
    InstanceConfig tab;
    tab.family = Family::tabular;
    tab.n = 4;
    tab.d = 3;
    tab.tabular_size = 12;
    tab.delta_env = 0.6;
    tab.delta_obj = 0.5;
    tab.seed = seed;

    guarded("density ratio bounds and mixture identity", [&] {
        const std::size_t draws = quick ? 1000 : 10000;
        CheckResult a = check_ratio_laws(generate_gaussian_instance(g), draws, seed);
        const CheckResult b = check_ratio_laws(generate_tabular_instance(tab), draws, seed);
        a.passed = a.passed && b.passed;
        a.detail += "; tabular: " + b.detail;
        return a;
    });
    guarded("correction unbiasedness", [&] {
        InstanceConfig small = g;
        small.n = 5;
        small.d = 3;
        small.delta_env = 0.5;
        return check_correction_unbiased(generate_gaussian_instance(small), quick ? 2 : 5,
                                         quick ? 20000 : 100000, 4.0, seed);
    });
    guarded("analytic vs Monte Carlo references", [&] {
        std::vector<Instance> insts;
        const std::size_t count = quick ? 3 : 10;
        for (std::size_t k = 0; k < count; ++k) {
            InstanceConfig c = g;
            c.n = 5;
            c.delta_env = 0.5;
            c.seed = derive_seed(seed, "oracle", k);
            insts.push_back(generate_gaussian_instance(c));
        }
        insts.push_back(generate_tabular_instance(tab));
        return check_oracle_equivalence(insts, 5000, 0.05);
    });
    guarded("nu = 1 for PSD features", [&] { return check_nu_psd(quick ? 2000 : 10000, seed); });
    guarded("nu <= 1 + eps for multiplicative noise",
            [&] { return check_nu_multiplicative(0.5, quick ? 2000 : 10000, seed); });
    guarded("nu <= (1 + gamma) / (1 - gamma) for TD features", [&] { return check_nu_td(0.9, seed); });
    guarded("coupled density-ratio estimation", [&] {
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t k = 0; k < (quick ? 3u : 10u); ++k) seeds.push_back(seed + k);
        return check_coupled_dre(10000, 0.01, seeds);
    });
    guarded("schedule algebra", [&] { return check_schedule_algebra(100, seed); });
    guarded("serial vs parallel determinism", [&] {
        RunConfig cfg;
        cfg.instance.n = 6;
        cfg.instance.d = 3;
        cfg.instance.delta_env = 0.3;
        cfg.instance.delta_obj = 0.3;
        cfg.algorithms = {AlgorithmId{}, AlgorithmId{AlgorithmKind::fedavg}, AlgorithmId{AlgorithmKind::independent}};
        cfg.t_max = quick ? 20 : 60;
        cfg.seeds = {0, 1, 2, 3};
        cfg.nu_samples = 200;
        cfg.tv_samples = 2000;
        return check_determinism(cfg, 8);
    });
    return out;
}

}  // namespace affpcl
