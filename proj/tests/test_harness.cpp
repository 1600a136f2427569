#include "helpers.hpp"

#include <fstream>
#include <sstream>

#include "affpcl/config.hpp"
#include "affpcl/errors.hpp"
#include "affpcl/harness.hpp"

using namespace affpcl;
using testutil::TempDir;

namespace {

RunConfig small_config() {
    RunConfig c;
    c.name = "small";
    c.instance = testutil::gaussian_config(5, 3, 0.3, 0.3, 9);
    c.algorithms = {AlgorithmId{}, AlgorithmId{AlgorithmKind::fedavg}, AlgorithmId{AlgorithmKind::independent}};
    c.t_max = 25;
    c.seeds = {1, 2, 3};
    c.nu_samples = 200;
    c.tv_samples = 2000;
    c.summary_window = 5;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("initial record is the distance from zero") {
    RunConfig c = small_config();
    c.t_max = 1;
    const RunResult r = run_experiment(c, {1, {}});
    const auto& panel = r.panels.front();
    REQUIRE(panel.records.size() == c.seeds.size() * c.algorithms.size());
    const Instance inst = make_instance(seeded_instance_config(c.instance, c.seeds[0]));
    double expected = 0.0;
    for (const auto& x : inst.x_star) expected += x.squared_norm() / static_cast<double>(inst.n());
    CHECK(panel.records.front().t == 0);
    CHECK(panel.records.front().mse0 == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("record counts follow the stride") {
    RunConfig c = small_config();
    c.record_every = 7;
    const RunResult r = run_experiment(c, {1, {}});
    const std::size_t per_run = (c.t_max + c.record_every - 1) / c.record_every;
    CHECK(r.panels.front().records.size() == per_run * c.seeds.size() * c.algorithms.size());
    CHECK(r.panels.front().records[1].t == 7);
}

TEST_CASE("runs are deterministic and seed-isolated") {
    const RunConfig c = small_config();
    const RunResult a = run_experiment(c, {1, {}});
    const RunResult b = run_experiment(c, {4, {}});
    CHECK(metrics_csv_text(a.panels.front().records) == metrics_csv_text(b.panels.front().records));

    RunConfig changed = c;
    changed.seeds[1] = 77;
    const RunResult d = run_experiment(changed, {2, {}});
    auto only_seed = [](const RunResult& r, std::uint64_t seed) {
        std::vector<MetricsRecord> out;
        for (const auto& rec : r.panels.front().records)
            if (rec.seed == seed) out.push_back(rec);
        return metrics_csv_text(out);
    };
    CHECK(only_seed(a, 1) == only_seed(d, 1));
    CHECK(only_seed(a, 3) == only_seed(d, 3));
}

TEST_CASE("errors are annotated with the seed") {
    RunConfig c = small_config();
    c.algorithms = {AlgorithmId{AlgorithmKind::affpcl_known}};
    try {
        run_experiment(c, {1, {}});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("seed 1") != std::string::npos);
    }
}

TEST_CASE("summaries") {
    CHECK(percentile({5, 1, 4, 2, 3}, 0.05) == 1);
    CHECK(percentile({5, 1, 4, 2, 3}, 0.95) == 5);
    CHECK(percentile({5, 1, 4, 2, 3}, 0.5) == 3);
    std::vector<double> ten;
    for (int k = 1; k <= 10; ++k) ten.push_back(k);
    CHECK(percentile(ten, 0.05) == 1);
    CHECK(percentile(ten, 0.95) == 10);
    CHECK(percentile(ten, 0.9) == 9);

    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 2, 3}, {1, 2, 2, 3}) == doctest::Approx(1.0));

    MetricsRecord r;
    r.run_id = "x";
    r.algorithm = AlgorithmId{};
    r.agent_error = {1.0, 3.0, 5.0};
    r.mse0 = 3.0;
    r.center = 0;
    r.center_error = 1.0;
    std::vector<MetricsRecord> recs;
    for (std::size_t t = 0; t < 4; ++t) {
        r.t = t;
        r.mse0 = 3.0 + static_cast<double>(t);
        recs.push_back(r);
    }
    const auto s = summarize(recs, 2);
    REQUIRE(s.size() == 1);
    CHECK(s[0].final_mean == doctest::Approx(5.5));
    CHECK(*s[0].center_agent_mse == 1.0);
    // Generic agents: (n mse0 - center) / (n - 1) averaged over the window.
    CHECK(*s[0].generic_agent_mse == doctest::Approx(((3 * 5.0 - 1) / 2 + (3 * 6.0 - 1) / 2) / 2));
    CHECK(!s[0].coe_mse);
}

TEST_CASE("metrics.csv") {
    TempDir dir("csv");
    write_metrics_csv({}, dir.path() / "empty.csv");
    CHECK(slurp(dir.path() / "empty.csv") == metrics_csv_header() + "\n");

    const RunResult r = run_experiment(small_config(), {1, {}});
    const auto& recs = r.panels.front().records;
    write_metrics_csv(recs, dir.path() / "m.csv");
    const auto back = read_metrics_csv(dir.path() / "m.csv");
    REQUIRE(back.size() == recs.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
        CHECK(back[k].run_id == recs[k].run_id);
        CHECK(back[k].seed == recs[k].seed);
        CHECK(back[k].algorithm == recs[k].algorithm);
        CHECK(back[k].t == recs[k].t);
        CHECK(back[k].agent_error == recs[k].agent_error);
        CHECK(back[k].mse0 == recs[k].mse0);
    }

    std::ofstream(dir.path() / "bad.csv") << "nope\n";
    CHECK_THROWS_AS(read_metrics_csv(dir.path() / "bad.csv"), IoError);
    CHECK_THROWS_AS(write_metrics_csv({}, dir.path() / "empty.csv" / "sub.csv"), IoError);
}

TEST_CASE("persist and report") {
    TempDir dir("persist");
    const RunConfig c = small_config();
    const RunResult r = run_experiment(c, {1, {}});
    persist(r, dir.path());
    REQUIRE(std::filesystem::exists(dir.path() / "metrics.csv"));
    const Json summary = load_json_file(dir.path() / "summary.json");
    Json echoed = summary.at("config");
    echoed.erase("panel");
    CHECK(run_config_from_json(echoed) == c);
    CHECK(summary.at("per_algorithm").contains("affpcl_full"));
    CHECK(summary.contains("heterogeneity"));

    const auto first = report_from_csv(dir.path() / "metrics.csv", std::nullopt, std::nullopt);
    const std::string once = slurp(first);
    report_from_csv(dir.path() / "metrics.csv", std::nullopt, std::nullopt);
    CHECK(slurp(first) == once);
    const Json again = load_json_file(first);
    CHECK(again.at("per_algorithm").at("fedavg").at("final_mean") ==
          summary.at("per_algorithm").at("fedavg").at("final_mean"));

    RunConfig multi = c;
    multi.panels = {Panel{"low", 0.0, 0.0, std::nullopt}, Panel{"high", 0.6, 0.6, std::nullopt}};
    persist(run_experiment(multi, {1, {}}), dir.path() / "multi");
    CHECK(std::filesystem::exists(dir.path() / "multi" / "low" / "metrics.csv"));
    CHECK(std::filesystem::exists(dir.path() / "multi" / "high" / "summary.json"));
    CHECK(std::filesystem::exists(dir.path() / "multi" / "summary.json"));
}

TEST_CASE("sweeps") {
    SweepConfig s;
    s.base = small_config();
    s.delta = {0.3};
    const SweepResult one = sweep(s, {1, {}});
    const RunResult direct = run_experiment(s.base, {1, {}});
    REQUIRE(one.points.size() == 1);
    for (std::size_t k = 0; k < direct.panels.front().summaries.size(); ++k)
        CHECK(one.points[0].summaries[k].final_mean == direct.panels.front().summaries[k].final_mean);
    CHECK(one.contour.front().value == direct.panels.front().summaries.front().final_mean);

    // For one agent FedAvg and independent learning coincide.
    SweepConfig self;
    self.base = small_config();
    self.base.algorithms = {AlgorithmId{AlgorithmKind::independent}, AlgorithmId{AlgorithmKind::fedavg}};
    self.n = {1};
    const SweepResult same = sweep(self, {1, {}});
    CHECK(same.points[0].improvement.front().second == doctest::Approx(1.0).epsilon(1e-12));

    // A failing grid point does not stop the sweep.
    SweepConfig partial;
    partial.base = small_config();
    partial.base.algorithms = {AlgorithmId{AlgorithmKind::affpcl_known}};
    partial.delta_env = {0.0, 0.4};
    partial.delta_obj = {0.2};
    const SweepResult p = sweep(partial, {2, {}});
    REQUIRE(p.points.size() == 2);
    CHECK(!p.points[0].error);
    CHECK(p.points[1].error);
    CHECK(p.contour.size() == 1);

    TempDir dir("sweep");
    persist(p, dir.path());
    CHECK(std::filesystem::exists(dir.path() / "sweep.csv"));
    CHECK(load_json_file(dir.path() / "summary.json").contains("contour"));
}

TEST_CASE("loss trend over n at small delta") {
    SweepConfig s;
    s.base = small_config();
    s.base.algorithms = {AlgorithmId{}};
    s.base.t_max = 60;
    s.base.summary_window = 10;
    s.base.nu_samples = 0;
    s.base.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    s.base.instance.d = 5;
    s.delta = {0.02};
    s.n = {2, 5, 10, 20, 30, 40, 50};
    const SweepResult r = sweep(s, {0, {}});
    std::vector<double> n, v;
    for (const auto& p : r.points) {
        n.push_back(static_cast<double>(p.n));
        v.push_back(p.summaries.front().final_mean);
    }
    CHECK(spearman(n, v) <= -0.7);
}

TEST_CASE("config validation") {
    RunConfig c = small_config();
    c.seeds.clear();
    CHECK_THROWS_AS(validate(c), InvalidConfig);
    c = small_config();
    c.record_every = 0;
    CHECK_THROWS_AS(validate(c), InvalidConfig);
    SweepConfig s;
    CHECK_THROWS_AS(validate(s), InvalidConfig);
}
