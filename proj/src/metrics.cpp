#include "affpcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "affpcl/environments.hpp"
#include "affpcl/errors.hpp"

namespace affpcl {

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

MetricsRecord make_record(std::string run_id, std::uint64_t seed, const AlgorithmId& algorithm,
                          const LearnerState& state, const std::vector<Vector>& targets,
                          std::size_t center) {
    MetricsRecord r;
    r.run_id = std::move(run_id);
    r.seed = seed;
    r.algorithm = algorithm;
    r.t = state.t;
    r.agent_error.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        r.agent_error.push_back((state.x[i] - targets[i]).squared_norm());
    r.mse0 = mean_of(r.agent_error);
    r.center = center;
    if (center != kAggregate) r.center_error = r.agent_error.at(center);
    return r;
}

HeterogeneityReport heterogeneity_report(const Instance& inst, const ReportOptions& opts) {
    const std::size_t n = inst.n();
    HeterogeneityReport rep;

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            rep.delta_env = std::max(rep.delta_env, tv_distance(inst, i, j));

    rep.g_b = inst.theta_star_c.norm();
    for (const auto& th : inst.theta_star) rep.g_b = std::max(rep.g_b, th.norm());
    double max_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            max_gap = std::max(max_gap, (inst.theta_star[i] - inst.theta_star[j]).norm());
    rep.delta_obj = rep.g_b > 0.0 ? std::min(1.0, max_gap / (2.0 * rep.g_b)) : 0.0;

    const Vector& b0 = inst.aggregate.bbar;
    rep.g_b_mean = b0.norm();
    for (const auto& m : inst.means) rep.g_b_mean = std::max(rep.g_b_mean, m.bbar.norm());

    const TvEstimate tv = mixture_tv(inst, opts.tv_samples, derive_seed(opts.seed, "report-tv"));
    rep.delta_cen_env = tv.value;
    rep.tv_standard_error = tv.standard_error;
    rep.delta_cen.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double gap = (inst.means[i].bbar - b0).norm();
        const double obj = rep.g_b_mean > 0.0 ? std::min(1.0, gap / (2.0 * rep.g_b_mean)) : 0.0;
        rep.delta_cen[i] = std::max(tv.value[i], obj);
    }

    if (opts.nu_samples > 0) {
        rep.nu = estimate_nu(inst, opts.nu_samples, derive_seed(opts.seed, "report-nu"));
        rep.nu_estimated = true;
    }
    return effective_heterogeneity(std::move(rep));
}

HeterogeneityReport effective_heterogeneity(HeterogeneityReport report) {
    const double nu = report.nu_estimated ? report.nu.value : 1.0;
    auto eff = [nu](double raw) { return std::min(1.0, nu * raw); };
    report.effective_env = eff(report.delta_env);
    report.effective_obj = eff(report.delta_obj);
    report.effective_cen.clear();
    for (double d : report.delta_cen) report.effective_cen.push_back(eff(d));
    return report;
}

std::size_t center_agent(const HeterogeneityReport& report) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.delta_cen.size(); ++i)
        if (report.delta_cen[i] < report.delta_cen[best]) best = i;
    return best;
}

namespace {

Matrix abs_sqrt(const Matrix& a) { return psd_sqrt(sym(a.transpose() * a)); }

double nu_from(const std::vector<Matrix>& dbar, const std::vector<Matrix>& abar_inv) {
    double nu = 0.0;
    for (std::size_t i = 0; i < dbar.size(); ++i) nu = std::max(nu, operator_norm(dbar[i] * abar_inv[i]));
    return nu;
}

}  // namespace

NuEstimate estimate_nu(const NuModel& model, std::size_t samples, std::uint64_t seed) {
    constexpr std::size_t kGroups = 20;
    if (samples < 100) throw InvalidConfig("nu estimation needs at least 100 samples");
    const std::size_t agents = model.abar.size();
    std::vector<Matrix> abar_inv;
    for (const auto& a : model.abar) abar_inv.push_back(inverse(a));

    // group_sum[i][g]: sum of D(s) over the draws of agent i in block g.
    std::vector<std::vector<Matrix>> group_sum(agents);
    std::vector<std::size_t> group_count(kGroups, 0);
    for (std::size_t k = 0; k < samples; ++k) ++group_count[k % kGroups];
    for (std::size_t i = 0; i < agents; ++i) {
        const std::size_t d = model.abar[i].rows();
        group_sum[i].assign(kGroups, Matrix(d, d));
        Stream rng(seed, "nu", i);
        for (std::size_t k = 0; k < samples; ++k) group_sum[i][k % kGroups] += abs_sqrt(model.sample(i, rng));
    }

    auto dbar_without = [&](std::size_t skip) {
        std::vector<Matrix> dbar;
        std::size_t count = 0;
        for (std::size_t g = 0; g < kGroups; ++g)
            if (g != skip) count += group_count[g];
        for (std::size_t i = 0; i < agents; ++i) {
            Matrix acc(model.abar[i].rows(), model.abar[i].cols());
            for (std::size_t g = 0; g < kGroups; ++g)
                if (g != skip) acc += group_sum[i][g];
            acc *= 1.0 / static_cast<double>(count);
            dbar.push_back(std::move(acc));
        }
        return dbar;
    };

    NuEstimate out;
    out.value = nu_from(dbar_without(kGroups), abar_inv);
    std::vector<double> loo(kGroups);
    for (std::size_t g = 0; g < kGroups; ++g) loo[g] = nu_from(dbar_without(g), abar_inv);
    const double loo_mean = mean_of(loo);
    double ss = 0.0;
    for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
    const double groups = static_cast<double>(kGroups);
    out.standard_error = std::sqrt((groups - 1.0) / groups * ss);
    return out;
}

NuModel instance_nu_model(const Instance& inst) {
    NuModel model;
    for (const auto& m : inst.means) model.abar.push_back(m.abar);
    model.sample = [&inst](std::size_t agent, Stream& rng) {
        return observe(inst, agent, sample_state(inst, agent, rng)).a;
    };
    return model;
}

NuEstimate estimate_nu(const Instance& inst, std::size_t samples, std::uint64_t seed) {
    if (!inst.is_finite()) return estimate_nu(instance_nu_model(inst), samples, seed);
    const auto& probs = inst.finite_probs();
    std::vector<Matrix> dbar, abar_inv;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        Matrix acc(inst.dim(), inst.dim());
        for (std::size_t s = 0; s < probs[i].size(); ++s) {
            if (probs[i][s] == 0.0) continue;
            acc.axpy(probs[i][s], abs_sqrt(observe(inst, i, State{s, {}}).a));
        }
        dbar.push_back(std::move(acc));
        abar_inv.push_back(inverse(inst.means[i].abar));
    }
    return {nu_from(dbar, abar_inv), 0.0};
}

namespace {

Matrix rotation(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Matrix{{c, -s}, {s, c}};
}

}  // namespace

NuModel rotation_nu_model(double eps) {
    if (!(eps > 0.0 && eps <= 2.0 * std::numbers::pi)) throw InvalidConfig("rotation eps must lie in (0, 2 pi]");
    const double width = 2.0 * std::numbers::pi - eps;
    NuModel model;
    // E cos s and E sin s for s uniform on [0, width].
    const double ec = std::sin(width) / width;
    const double es = (1.0 - std::cos(width)) / width;
    model.abar.push_back(Matrix{{ec, -es}, {es, ec}});
    model.sample = [width](std::size_t, Stream& rng) { return rotation(rng.uniform(0.0, width)); };
    return model;
}

NuModel multiplicative_nu_model(double eps, std::size_t d, std::uint64_t seed) {
    Stream rng(seed, "multiplicative-nu");
    const Matrix q = qr_orthogonal(rng.normal_matrix(d, d));
    // A non-symmetric mean: a PD matrix times a rotation-like orthogonal factor.
    const Matrix abar = random_pd_matrix(rng, d, 1.0) * qr_orthogonal(rng.normal_matrix(d, d));
    NuModel model;
    model.abar.push_back(abar);
    model.sample = [q, abar, eps, d](std::size_t, Stream& r) {
        const double sign = r.uniform() < 0.5 ? -1.0 : 1.0;
        Matrix m = Matrix::identity(d);
        m.axpy(sign * eps, q);
        return m * abar;
    };
    return model;
}

NuModel psd_nu_model(std::size_t d, std::uint64_t seed) {
    Stream rng(seed, "psd-nu");
    const Vector mean = rng.normal_vector(d);
    NuModel model;
    Matrix abar = Matrix::outer(mean, mean);
    for (std::size_t k = 0; k < d; ++k) abar(k, k) += 1.5;
    model.abar.push_back(abar);
    model.sample = [mean, d](std::size_t, Stream& r) {
        Vector c = r.normal_vector(d);
        c += mean;
        Matrix a = Matrix::outer(c, c);
        for (std::size_t k = 0; k < d; ++k) a(k, k) += 0.5;
        return a;
    };
    return model;
}

}  // namespace affpcl
