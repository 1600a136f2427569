#include "helpers.hpp"

#include "affpcl/environments.hpp"
#include "affpcl/errors.hpp"

using namespace affpcl;
using testutil::close;

namespace {

Instance two_state_instance(Vector p1, Vector p2) {
    InstanceConfig cfg;
    TabularParts parts;
    parts.probs = {std::move(p1), std::move(p2)};
    parts.a_diag = {Vector{1.0}, Vector{2.0}};
    parts.phi_diag = {Vector{1.0}, Vector{1.5}};
    parts.thetas = {Vector{1.0}, Vector{2.0}};
    return build_tabular_instance(cfg, std::move(parts));
}

}  // namespace

TEST_CASE("sampling laws") {
    SUBCASE("homogeneous agents share the law") {
        const Instance inst = generate_gaussian_instance(testutil::gaussian_config(3, 2, 0.0, 0.0, 1));
        const int draws = 10000;
        for (std::size_t i = 0; i < 3; ++i) {
            Stream rng(1, "law", i);
            Vector mean(2);
            for (int k = 0; k < draws; ++k) mean += sample_state(inst, i, rng).point;
            mean *= 1.0 / draws;
            // Unit variance per coordinate.
            for (double v : mean) CHECK(std::abs(v) < 4.0 / std::sqrt(draws));
        }
    }
    SUBCASE("degenerate tabular law") {
        const Instance inst = two_state_instance(Vector{1.0, 0.0}, Vector{0.5, 0.5});
        Stream rng(2);
        for (int k = 0; k < 1000; ++k) CHECK(sample_state(inst, 0, rng).index == 0);
    }
    SUBCASE("fixed stream replays") {
        const Instance inst = generate_gaussian_instance(testutil::gaussian_config(2, 3, 0.5, 0.0, 1));
        Stream a(9), b(9);
        for (int k = 0; k < 50; ++k) CHECK(sample_state(inst, 1, a) == sample_state(inst, 1, b));
    }
}

TEST_CASE("observations") {
    SUBCASE("no noise means constant A") {
        const Matrix a_base{{2, 1}, {0, 3}};
        const Instance inst = testutil::deterministic_instance(a_base, Matrix::identity(2), {Vector{1, 2}});
        Stream rng(3);
        for (int k = 0; k < 10; ++k) CHECK(observe(inst, 0, sample_state(inst, 0, rng)).a == a_base);
    }
    SUBCASE("multiplicative scalar case") {
        InstanceConfig cfg;
        cfg.eps_a = 1.0;
        const Instance inst = build_gaussian_instance(cfg, {{Vector{0.0}}, Matrix{{3}}, Matrix{{1}}, {Vector{1}}});
        CHECK(observe(inst, 0, State{0, Vector{2.0}}).a(0, 0) == doctest::Approx(15.0));
    }
    SUBCASE("b equals Phi theta at every state") {
        const Instance inst = generate_gaussian_instance(testutil::gaussian_config(4, 3, 0.5, 0.5, 4));
        Stream rng(4);
        for (std::size_t i = 0; i < 4; ++i)
            for (int k = 0; k < 20; ++k) {
                const Observation o = observe(inst, i, sample_state(inst, i, rng));
                CHECK(close(o.b, o.phi * inst.theta_star[i], 1e-12));
                CHECK(close(o.b, objective_at(inst, i, o.state), 1e-12));
            }
    }
}

TEST_CASE("density ratios") {
    SUBCASE("homogeneous and single agent") {
        const Instance homo = generate_gaussian_instance(testutil::gaussian_config(4, 3, 0.0, 0.5, 5));
        const Instance single = generate_gaussian_instance(testutil::gaussian_config(1, 3, 0.0, 0.0, 5));
        Stream rng(5);
        for (int k = 0; k < 20; ++k) {
            const State s = sample_state(homo, 0, rng);
            for (double r : density_ratios(homo, s)) CHECK(r == doctest::Approx(1.0));
            CHECK(density_ratio(single, 0, s) == doctest::Approx(1.0));
        }
    }
    SUBCASE("hand-computed two-state mixture") {
        const Instance inst = two_state_instance(Vector{0.5, 0.5}, Vector{0.25, 0.75});
        CHECK(density_ratio(inst, 0, State{0, {}}) == doctest::Approx(4.0 / 3.0));
        for (std::size_t s = 0; s < 2; ++s) {
            const auto r = density_ratios(inst, State{s, {}});
            CHECK((r[0] + r[1]) / 2.0 == doctest::Approx(1.0));
        }
    }
    SUBCASE("zero mixture mass gives zero") {
        const Instance inst = two_state_instance(Vector{1.0, 0.0}, Vector{1.0, 0.0});
        CHECK(density_ratio(inst, 0, State{1, {}}) == 0.0);
    }
}

TEST_CASE("total variation") {
    const Instance inst = generate_gaussian_instance(testutil::gaussian_config(3, 2, 0.5, 0.0, 6));
    CHECK(tv_distance(inst, 1, 1) == 0.0);
    // 1-d N(0,1) vs N(2,1) by numerical integration of half |p - q|.
    double integral = 0.0;
    const double h = 1e-4;
    for (double x = -12.0; x < 14.0; x += h) {
        const double p = std::exp(-0.5 * x * x);
        const double q = std::exp(-0.5 * (x - 2.0) * (x - 2.0));
        integral += 0.5 * std::abs(p - q) * h / std::sqrt(2.0 * M_PI);
    }
    CHECK(gaussian_tv(Vector{0.0}, Vector{2.0}) == doctest::Approx(integral).epsilon(1e-6));
    CHECK(gaussian_tv(Vector{0.0}, Vector{2.0}) == doctest::Approx(0.6827).epsilon(1e-4));

    const Instance disjoint = two_state_instance(Vector{1.0, 0.0}, Vector{0.0, 1.0});
    CHECK(tv_distance(disjoint, 0, 1) == doctest::Approx(1.0));
    const TvEstimate tv = mixture_tv(disjoint, 10, 1);
    CHECK(tv.value[0] == doctest::Approx(0.5));
    CHECK(tv.standard_error[0] == 0.0);
}

TEST_CASE("maximal coupling") {
    SUBCASE("identical laws always couple") {
        const Instance inst = two_state_instance(Vector{0.3, 0.7}, Vector{0.3, 0.7});
        Stream rng(7);
        for (int k = 0; k < 1000; ++k) {
            const CoupledDraw d = coupled_sample(inst, 0, rng);
            CHECK(d.coupled);
            CHECK(d.agent_state == d.mixture_state);
        }
    }
    SUBCASE("coupling frequency is one minus TV") {
        const Instance inst = generate_tabular_instance(testutil::tabular_config(3, 2, 6, 0.6, 0.0, 8));
        const double tv = tv_distance(inst, 1, kAggregate);
        Stream rng(8);
        const int draws = 100000;
        int coupled = 0;
        for (int k = 0; k < draws; ++k) coupled += coupled_sample(inst, 1, rng).coupled ? 1 : 0;
        const double p = 1.0 - tv;
        CHECK(std::abs(coupled / static_cast<double>(draws) - p) < 4.0 * std::sqrt(p * (1 - p) / draws));
    }
    SUBCASE("marginals are preserved") {
        const Instance inst = two_state_instance(Vector{0.9, 0.1}, Vector{0.2, 0.8});
        Stream rng(9);
        const int draws = 100000;
        int agent0 = 0, mix0 = 0;
        for (int k = 0; k < draws; ++k) {
            const CoupledDraw d = coupled_sample(inst, 0, rng);
            agent0 += d.agent_state.index == 0;
            mix0 += d.mixture_state.index == 0;
        }
        CHECK(std::abs(agent0 / double(draws) - 0.9) < 4.0 * std::sqrt(0.09 / draws));
        CHECK(std::abs(mix0 / double(draws) - 0.55) < 4.0 * std::sqrt(0.2475 / draws));
    }
    SUBCASE("Gaussian families are rejected") {
        const Instance inst = generate_gaussian_instance(testutil::gaussian_config(2, 2, 0.5, 0.0, 1));
        Stream rng(1);
        CHECK_THROWS_AS(coupled_sample(inst, 0, rng), UnsupportedFamily);
    }
}
