#include "helpers.hpp"

#include "affpcl/algorithms.hpp"
#include "affpcl/errors.hpp"

using namespace affpcl;
using testutil::close;
using testutil::scalar_batch;

namespace {

LearnerState scalar_state(std::vector<double> xs, double x_c = 0.0, double theta_c = 0.0) {
    LearnerState s = LearnerState::zeros(xs.size(), 1, 1);
    for (std::size_t i = 0; i < xs.size(); ++i) s.x[i] = Vector{xs[i]};
    s.x_c = Vector{x_c};
    s.theta_c = Vector{theta_c};
    s.refresh_average();
    return s;
}

Instance deterministic_3d() {
    const Matrix a{{3, 0.5, 0}, {0.2, 2, 0.1}, {0, 0.3, 4}};
    const Matrix phi{{2, 0, 0}, {0, 1.5, 0.2}, {0, 0.2, 1}};
    return testutil::deterministic_instance(a, phi, {Vector{1, 0, 2}, Vector{0, 1, -1}, Vector{2, 2, 0}});
}

LearnerState at_fixed_point(const Instance& inst) {
    LearnerState s = LearnerState::zeros(inst);
    s.x = inst.x_star;
    s.x_c = inst.x_star_c;
    s.theta_c = inst.theta_star_c;
    s.refresh_average();
    return s;
}

}  // namespace

TEST_CASE("residuals") {
    const Observation o = testutil::scalar_obs(0, 2.0, 4.0);
    CHECK(residual(o, Vector{0.0})[0] == -4.0);
    Stream rng(1);
    const Instance inst = generate_gaussian_instance(testutil::gaussian_config(2, 3, 0.5, 0.5, 1));
    const Observation g = observe(inst, 0, sample_state(inst, 0, rng));
    const Vector x = rng.normal_vector(3), y = rng.normal_vector(3);
    CHECK(close(residual(g, x + y) - residual(g, x), g.a * y, 1e-12));
    CHECK(close(estimated_residual(g, x, inst.theta_star[0]), residual(g, x), 1e-12));
}

TEST_CASE("independent learning") {
    const LearnerState s = independent_step(scalar_state({0.0}), scalar_batch({{1.0, 1.0}}), 0.5);
    CHECK(s.x[0][0] == 0.5);
    CHECK(s.t == 1);

    const Instance inst = deterministic_3d();
    const LearnerState fixed = independent_step(at_fixed_point(inst), make_batch(inst, 1, 0, {}), 0.1);
    for (std::size_t i = 0; i < inst.n(); ++i) CHECK(close(fixed.x[i], inst.x_star[i], 1e-12));

    // Agent 0 ignores every other agent's sample.
    const Instance g = generate_gaussian_instance(testutil::gaussian_config(3, 2, 0.5, 0.5, 2));
    RoundBatch batch = make_batch(g, 5, 0, {});
    const LearnerState a = independent_step(LearnerState::zeros(g), batch, 0.1);
    std::swap(batch.obs[1], batch.obs[2]);
    const LearnerState b = independent_step(LearnerState::zeros(g), batch, 0.1);
    CHECK(a.x[0] == b.x[0]);
}

TEST_CASE("federated averaging") {
    const LearnerState s = fedavg_step(scalar_state({5.0, -5.0}), scalar_batch({{1.0, 1.0}, {1.0, 3.0}}), 0.1);
    CHECK(s.x_c[0] == doctest::Approx(0.2));
    CHECK(s.x[0] == s.x_c);
    CHECK(s.x[1] == s.x_c);

    // n = 1 coincides with independent learning.
    const Instance one = generate_gaussian_instance(testutil::gaussian_config(1, 3, 0.0, 0.0, 3));
    LearnerState f = LearnerState::zeros(one), i = LearnerState::zeros(one);
    for (int t = 0; t < 20; ++t) {
        f = algorithm_round(one, {AlgorithmKind::fedavg}, f, 9, 0.05);
        i = algorithm_round(one, {AlgorithmKind::independent}, i, 9, 0.05);
    }
    CHECK(f.x[0] == i.x[0]);

    const Instance homo = testutil::deterministic_instance(Matrix{{2, 0}, {0, 3}}, Matrix::identity(2),
                                                           {Vector{1, 1}, Vector{1, 1}});
    const LearnerState h = fedavg_step(at_fixed_point(homo), make_batch(homo, 1, 0, {}), 0.1);
    CHECK(close(h.x_c, homo.x_star_c, 1e-12));
}

TEST_CASE("central objective estimation") {
    const LearnerState s = coe_step(scalar_state({0, 0}), scalar_batch({{1.0, 0.0}, {1.0, 2.0}}), 0.1);
    CHECK(s.theta_c[0] == doctest::Approx(0.1));

    const Instance inst = deterministic_3d();
    const LearnerState fixed = coe_step(at_fixed_point(inst), make_batch(inst, 2, 0, {}), 0.1);
    CHECK(close(fixed.theta_c, inst.theta_star_c, 1e-12));

    const Instance homo = generate_gaussian_instance(testutil::gaussian_config(20, 5, 0.0, 0.0, 4));
    CHECK(close(homo.theta_star_c, homo.theta_star[0], 1e-10));
    LearnerState st = LearnerState::zeros(homo);
    for (std::size_t t = 0; t < 10000; ++t) st = coe_step(std::move(st), make_batch(homo, 4, t, {}), 0.01);
    CHECK((st.theta_c - homo.theta_star_c).squared_norm() <= 1e-3);
}

TEST_CASE("central decision learning") {
    const Instance inst = deterministic_3d();
    for (CdlVariant v : {CdlVariant::v1, CdlVariant::v2}) {
        const LearnerState s = cdl_step(at_fixed_point(inst), make_batch(inst, 3, 0, {}), 0.1, v);
        CHECK(close(s.x_c, inst.x_star_c, 1e-12));
    }

    // v2 with the exact central objective steps along Abar^0 x_c - bbar^0 on
    // average.
    const Instance g = generate_gaussian_instance(testutil::gaussian_config(4, 2, 0.5, 0.5, 5));
    LearnerState base = LearnerState::zeros(g);
    base.x_c = Vector{0.3, -0.2};
    base.theta_c = g.theta_star_c;
    const Vector expected = g.aggregate.abar * base.x_c - g.aggregate.bbar;
    const int rounds = 100000;
    Vector sum(2), sum_sq(2);
    for (int t = 0; t < rounds; ++t) {
        const LearnerState next = cdl_step(base, make_batch(g, 5, t, {}), 1.0, CdlVariant::v2);
        const Vector dir = base.x_c - next.x_c;
        for (std::size_t k = 0; k < 2; ++k) {
            sum[k] += dir[k];
            sum_sq[k] += dir[k] * dir[k];
        }
    }
    for (std::size_t k = 0; k < 2; ++k) {
        const double mean = sum[k] / rounds;
        const double se = std::sqrt((sum_sq[k] / rounds - mean * mean) / rounds);
        CHECK(std::abs(mean - expected[k]) <= 4.0 * se);
    }

    // Homogeneous environment: both variants share the expected direction.
    const Instance h = generate_gaussian_instance(testutil::gaussian_config(4, 2, 0.0, 0.7, 6));
    CHECK(close(h.aggregate.phibar * h.theta_star_c, h.aggregate.bbar, 1e-10));
}

TEST_CASE("AffPCL with known central objective") {
    const Instance inst = testutil::deterministic_instance(Matrix{{1}}, Matrix{{1}}, {Vector{0}, Vector{2}});
    LearnerState s = LearnerState::zeros(inst);
    const LearnerState next = affpcl_known_step(inst, s, make_batch(inst, 1, 0, {}), 0.5);
    // Agent 0: g = 0, g0 = -1, g(0->1) = -1, so the corrected direction is 0.
    CHECK(next.x[0][0] == doctest::Approx(0.0));
    CHECK(next.x[1][0] == doctest::Approx(1.0));

    const Instance one = generate_gaussian_instance(testutil::gaussian_config(1, 3, 0.0, 0.0, 7));
    LearnerState k = LearnerState::zeros(one), i = LearnerState::zeros(one);
    for (int t = 0; t < 20; ++t) {
        k = algorithm_round(one, {AlgorithmKind::affpcl_known}, k, 7, 0.05);
        i = algorithm_round(one, {AlgorithmKind::independent}, i, 7, 0.05);
    }
    CHECK(close(k.x[0], i.x[0], 1e-12));

    // Shared noise-free objectives and x^i = x_avg: the corrections cancel.
    const Instance same = testutil::deterministic_instance(Matrix{{2, 0.5}, {0, 1}}, Matrix::identity(2),
                                                           {Vector{1, -1}, Vector{1, -1}, Vector{1, -1}});
    LearnerState st = LearnerState::zeros(same);
    for (auto& x : st.x) x = Vector{0.4, -0.1};
    st.refresh_average();
    const RoundBatch batch = make_batch(same, 8, 0, {});
    const LearnerState known = affpcl_known_step(same, st, batch, 0.1);
    const LearnerState indep = independent_step(st, batch, 0.1);
    for (std::size_t j = 0; j < 3; ++j) CHECK(close(known.x[j], indep.x[j], 1e-12));

    const Instance het = generate_gaussian_instance(testutil::gaussian_config(3, 2, 0.2, 0.0, 8));
    CHECK_THROWS_AS(affpcl_known_step(het, LearnerState::zeros(het), make_batch(het, 1, 0, {}), 0.1),
                    HeterogeneousEnvironment);
    CHECK_THROWS_AS(check_compatible({AlgorithmKind::affpcl_known}, het), HeterogeneousEnvironment);
}

TEST_CASE("importance-corrected direction") {
    const Instance homo = generate_gaussian_instance(testutil::gaussian_config(3, 2, 0.0, 0.5, 9));
    const RoundBatch batch = make_batch(homo, 9, 0, {true, DreMode::exact});
    const Vector x_c{0.1, 0.2}, theta{0.3, -0.4};
    Vector plain(2);
    for (const auto& o : batch.obs) plain.axpy(1.0 / 3.0, estimated_residual(o, x_c, theta));
    CHECK(close(importance_corrected_direction(1, batch, x_c, theta), plain, 1e-12));

    const Instance one = generate_gaussian_instance(testutil::gaussian_config(1, 2, 0.0, 0.0, 9));
    const RoundBatch b1 = make_batch(one, 9, 0, {true, DreMode::exact});
    CHECK(b1.rho[0][0] == 1.0);
    CHECK(close(importance_corrected_direction(0, b1, x_c, theta), estimated_residual(b1.obs[0], x_c, theta), 0.0));
}

TEST_CASE("full AffPCL round") {
    const Instance one = generate_gaussian_instance(testutil::gaussian_config(1, 3, 0.0, 0.0, 10));
    LearnerState a = LearnerState::zeros(one), b = LearnerState::zeros(one);
    for (int t = 0; t < 30; ++t) {
        a = algorithm_round(one, {AlgorithmKind::affpcl_full}, a, 10, 0.05);
        b = algorithm_round(one, {AlgorithmKind::independent}, b, 10, 0.05);
    }
    CHECK(a.x[0] == b.x[0]);

    const Instance inst = deterministic_3d();
    const LearnerState fixed =
        affpcl_full_round(at_fixed_point(inst), make_batch(inst, 3, 0, {true, DreMode::exact}), 0.1, CdlVariant::v1);
    for (std::size_t i = 0; i < inst.n(); ++i) CHECK(close(fixed.x[i], inst.x_star[i], 1e-12));
    CHECK(close(fixed.x_c, inst.x_star_c, 1e-12));
    CHECK(close(fixed.theta_c, inst.theta_star_c, 1e-12));

    CHECK_THROWS_AS(affpcl_full_round(LearnerState::zeros(inst), make_batch(inst, 3, 0, {}), 0.1, CdlVariant::v1),
                    MissingDensityRatio);
    CHECK_THROWS_AS(algorithm_round(inst, {AlgorithmKind::affpcl_full, CdlVariant::v1, DreMode::oracle_off},
                                    LearnerState::zeros(inst), 1, 0.1),
                    MissingDensityRatio);
    CHECK_THROWS_AS(check_compatible({AlgorithmKind::affpcl_full, CdlVariant::v1, DreMode::coupled_tabular}, inst),
                    UnsupportedFamily);
}

TEST_CASE("per-agent step sizes") {
    RoundSteps steps(0.1);
    steps.per_agent = {0.5, 0.0};
    const LearnerState s = independent_step(scalar_state({0, 0}), scalar_batch({{1, 1}, {1, 1}}), steps);
    CHECK(s.x[0][0] == 0.5);
    CHECK(s.x[1][0] == 0.0);
}

TEST_CASE("coupled density-ratio estimation") {
    CoupledDraw same;
    same.agent_state = State{1, {}};
    same.mixture_state = State{1, {}};
    same.coupled = true;
    CHECK(dre_coupled_step(Vector(3), same, 0.1) == Vector(3));

    SUBCASE("identical laws keep eta near zero") {
        const Instance inst = generate_tabular_instance(testutil::tabular_config(2, 2, 4, 0.0, 0.0, 11));
        LearnerState st = LearnerState::zeros(inst);
        for (std::size_t t = 0; t < 10000; ++t) {
            dre_round(inst, st, 11, 0.01);
            ++st.t;
        }
        for (const auto& eta : *st.eta) CHECK(eta.norm() == 0.0);
    }
    SUBCASE("two-state instance converges to the exact ratio") {
        InstanceConfig cfg;
        TabularParts parts;
        parts.probs = {Vector{0.7, 0.3}, Vector{0.2, 0.8}};
        parts.a_diag = {Vector{1.0}, Vector{2.0}};
        parts.phi_diag = {Vector{1.0}, Vector{1.0}};
        parts.thetas = {Vector{1.0}, Vector{1.0}};
        const Instance inst = build_tabular_instance(cfg, std::move(parts));
        LearnerState st = LearnerState::zeros(inst);
        for (std::size_t t = 0; t < 10000; ++t) {
            dre_round(inst, st, 12, 0.01);
            ++st.t;
        }
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t s = 0; s < 2; ++s)
                CHECK(std::abs(1.0 + (*st.eta)[i][s] - density_ratio(inst, i, State{s, {}})) <= 0.05);
    }
    SUBCASE("estimated ratios feed the round") {
        const Instance inst = generate_tabular_instance(testutil::tabular_config(3, 2, 6, 0.4, 0.4, 13));
        const AlgorithmId id{AlgorithmKind::affpcl_full, CdlVariant::v1, DreMode::coupled_tabular};
        LearnerState st = LearnerState::zeros(inst);
        for (int t = 0; t < 50; ++t) st = algorithm_round(inst, id, std::move(st), 13, 0.01);
        CHECK(st.t == 50);
        REQUIRE(st.eta);
        CHECK((*st.eta)[0].norm() > 0.0);
        const RoundBatch batch = make_batch(inst, 13, 50, {true, DreMode::coupled_tabular}, &st);
        for (const auto& row : batch.rho)
            for (double r : row) {
                CHECK(r >= 0.0);
                CHECK(r <= 3.0);
            }
    }
}

TEST_CASE("algorithm names round-trip") {
    for (auto k : {AlgorithmKind::independent, AlgorithmKind::fedavg, AlgorithmKind::affpcl_known,
                   AlgorithmKind::affpcl_full})
        CHECK(algorithm_kind_from_string(to_string(k)) == k);
    CHECK(algorithm_kind_from_string("affpcl") == AlgorithmKind::affpcl_full);
    for (auto m : {DreMode::exact, DreMode::coupled_tabular, DreMode::oracle_off})
        CHECK(dre_mode_from_string(to_string(m)) == m);
    CHECK(cdl_variant_from_string("v2") == CdlVariant::v2);
    CHECK_THROWS_AS(algorithm_kind_from_string("scaffold"), InvalidConfig);
}
