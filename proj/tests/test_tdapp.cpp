#include "helpers.hpp"

#include "affpcl/errors.hpp"
#include "affpcl/tdapp.hpp"

using namespace affpcl;
using testutil::close;

namespace {

// Two-state MRP with one-hot features and R(o, o') = 10 o + o' + 1.
MrpInstance one_hot_mrp(double gamma, const Matrix& p) {
    MrpInstance m;
    m.n = 1;
    m.states = p.rows();
    m.gamma = gamma;
    m.transitions = {p};
    Vector r(m.states * m.states);
    for (std::size_t o = 0; o < m.states; ++o)
        for (std::size_t q = 0; q < m.states; ++q) r[o * m.states + q] = 10.0 * o + q + 1.0;
    m.rewards = {r};
    for (std::size_t o = 0; o < m.states; ++o) m.features.push_back(Vector::unit(m.states, o));
    m.stationary = {stationary_distribution(p)};
    return m;
}

}  // namespace

TEST_CASE("stationary distribution") {
    const Vector pi = stationary_distribution(Matrix{{0.9, 0.1}, {0.5, 0.5}});
    CHECK(pi[0] == doctest::Approx(5.0 / 6.0));
    CHECK(pi[1] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("generated MRPs") {
    const MrpInstance m = generate_mrp(4, 6, 3, 0.9, 0.5, 0.5, 1);
    for (const auto& p : m.transitions)
        for (std::size_t o = 0; o < 6; ++o) {
            double total = 0.0;
            for (std::size_t q = 0; q < 6; ++q) total += p(o, q);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    for (const auto& phi : m.features) CHECK(phi.norm() == doctest::Approx(1.0));

    const MrpInstance homo = generate_mrp(3, 5, 2, 0.9, 0.0, 0.0, 2);
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(homo.transitions[i] == homo.transitions[0]);
        CHECK(homo.rewards[i] == homo.rewards[0]);
        CHECK(close(td_reference(homo, i), td_reference(homo, 0), 1e-12));
    }
}

TEST_CASE("Bellman observations") {
    const MrpInstance m = one_hot_mrp(0.5, Matrix{{0.5, 0.5}, {0.3, 0.7}});
    const Observation o = bellman_observation(m, 0, 0, 1);
    CHECK(close(o.a, Matrix{{1, -0.5}, {0, 0}}, 1e-15));
    CHECK(close(o.b, Vector{m.rewards[0][1], 0.0}, 1e-15));

    const MrpInstance g0 = generate_mrp(1, 4, 3, 0.0, 0.0, 0.0, 3);
    const Observation z = bellman_observation(g0, 0, 2, 3);
    const Vector& phi = g0.features[2];
    CHECK(close(z.a, Matrix::outer(phi, phi), 1e-15));
    CHECK(sym_min_eig(z.a) >= -1e-12);
}

TEST_CASE("expected TD system") {
    const MrpInstance m = generate_mrp(2, 5, 3, 0.9, 0.5, 0.5, 4);
    for (std::size_t i = 0; i < 2; ++i) {
        // Closed form Phi^T diag(pi) (Phi - gamma P Phi).
        Matrix phi(5, 3);
        for (std::size_t o = 0; o < 5; ++o)
            for (std::size_t k = 0; k < 3; ++k) phi(o, k) = m.features[o][k];
        const Matrix closed =
            phi.transpose() * Matrix::diagonal(m.stationary[i]) * (phi - m.gamma * (m.transitions[i] * phi));
        const SystemMeans means = td_means(m, i);
        CHECK(close(means.abar, closed, 1e-12));

        // Sample average of the TD(0) observations.
        Stream rng(4, "td", i);
        Matrix acc(3, 3);
        const int draws = 100000;
        std::vector<double> flat(25);
        for (std::size_t o = 0; o < 5; ++o)
            for (std::size_t q = 0; q < 5; ++q) flat[o * 5 + q] = m.stationary[i][o] * m.transitions[i](o, q);
        for (int k = 0; k < draws; ++k) {
            const std::size_t idx = rng.categorical(flat);
            acc += bellman_observation(m, i, idx / 5, idx % 5).a;
        }
        acc *= 1.0 / draws;
        CHECK(close(acc, closed, 0.02));
    }
}

TEST_CASE("TD fixed points") {
    const Matrix p{{0.2, 0.8}, {0.6, 0.4}};
    SUBCASE("myopic one-hot value is the expected reward") {
        const MrpInstance m = one_hot_mrp(0.0, p);
        const Vector v = td_reference(m, 0);
        for (std::size_t o = 0; o < 2; ++o) {
            double r = 0.0;
            for (std::size_t q = 0; q < 2; ++q) r += p(o, q) * m.rewards[0][o * 2 + q];
            CHECK(v[o] == doctest::Approx(r));
        }
    }
    SUBCASE("tabular features solve the Bellman equation") {
        const MrpInstance m = one_hot_mrp(0.9, p);
        const Vector v = td_reference(m, 0);
        Vector r(2);
        for (std::size_t o = 0; o < 2; ++o)
            for (std::size_t q = 0; q < 2; ++q) r[o] += p(o, q) * m.rewards[0][o * 2 + q];
        const Matrix lhs = Matrix::identity(2) - 0.9 * p;
        CHECK(close(lhs * v, r, 1e-10));
    }
}

TEST_CASE("MRP instances") {
    InstanceConfig cfg;
    cfg.family = Family::mrp;
    cfg.n = 4;
    cfg.d = 3;
    cfg.tabular_size = 6;
    cfg.gamma = 0.9;
    cfg.delta_env = 0.3;
    cfg.delta_obj = 0.3;
    cfg.seed = 5;
    const Instance inst = generate_mrp_instance(cfg);
    const auto& env = std::get<MrpEnv>(inst.env);
    CHECK(inst.state_count() == 36);
    for (std::size_t i = 0; i < inst.n(); ++i) {
        CHECK(close(inst.x_star[i], td_reference(env.mrp, i), 1e-10));
        double total = 0.0;
        for (double v : inst.finite_probs()[i]) total += v;
        CHECK(total == doctest::Approx(1.0));
    }
    const auto r = density_ratios(inst, State{7, {}});
    double mean = 0.0;
    for (double v : r) mean += v / 4.0;
    CHECK(mean == doctest::Approx(1.0));
}

TEST_CASE("AffPCL converges on a homogeneous MRP") {
    InstanceConfig cfg;
    cfg.family = Family::mrp;
    cfg.n = 10;
    cfg.d = 3;
    cfg.tabular_size = 8;
    cfg.gamma = 0.9;
    cfg.seed = 6;
    const Instance inst = generate_mrp_instance(cfg);
    LearnerState st = LearnerState::zeros(inst);
    auto mse = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < inst.n(); ++i) total += (st.x[i] - inst.x_star[i]).squared_norm();
        return total / static_cast<double>(inst.n());
    };
    const double initial = mse();
    for (int t = 0; t < 2000; ++t) st = algorithm_round(inst, AlgorithmId{}, std::move(st), 6, 0.01);
    CHECK(mse() <= initial / 10.0);
}
