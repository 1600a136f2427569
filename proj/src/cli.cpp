#include "affpcl/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "affpcl/config.hpp"
#include "affpcl/errors.hpp"
#include "affpcl/harness.hpp"
#include "affpcl/validation.hpp"

namespace affpcl {

namespace {

struct Options {
    std::string config;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    std::size_t threads = 0;
    std::optional<std::size_t> record_every;
    bool quick = false;
    std::uint64_t validate_seed = 7;
    std::string in;
    std::optional<std::size_t> window;
};

void apply_overrides(RunConfig& cfg, const Options& o) {
    if (o.seed_override) cfg.seeds = {*o.seed_override};
    if (o.record_every) cfg.record_every = *o.record_every;
}

ExecOptions exec_options(const Options& o, std::ostream& out) {
    ExecOptions exec;
    exec.threads = o.threads;
    exec.progress = [&out](const std::string& line) { out << line << std::endl; };
    return exec;
}

int run_command(const Options& o, std::ostream& out) {
    RunConfig cfg = load_run_config(o.config);
    apply_overrides(cfg, o);
    try {
        validate(cfg);
    } catch (const InvalidConfig& e) {
        throw ConfigError(o.config, e.what());
    }
    const RunResult result = run_experiment(cfg, exec_options(o, out));
    persist(result, o.out_dir);
    for (const auto& panel : result.panels)
        for (const auto& s : panel.summaries) {
            char line[256];
            std::snprintf(line, sizeof line, "%s %s: final MSE %.6g [p5 %.6g, p95 %.6g]", panel.name.c_str(),
                          s.label.c_str(), s.final_mean, s.p5, s.p95);
            out << line << "\n";
        }
    out << "wrote " << o.out_dir << "\n";
    return kExitOk;
}

int sweep_command(const Options& o, std::ostream& out) {
    SweepConfig cfg = load_sweep_config(o.config);
    apply_overrides(cfg.base, o);
    try {
        validate(cfg);
    } catch (const InvalidConfig& e) {
        throw ConfigError(o.config, e.what());
    }
    const SweepResult result = sweep(cfg, exec_options(o, out));
    persist(result, o.out_dir);
    std::size_t failed = 0;
    for (const auto& p : result.points)
        if (p.error) ++failed;
    out << "wrote " << o.out_dir << " (" << result.points.size() << " grid points, " << failed << " failed)\n";
    return kExitOk;
}

int validate_command(const Options& o, std::ostream& out) {
    const auto results = run_validation(o.quick, o.validate_seed);
    bool all = true;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        all = all && r.passed;
    }
    out << (all ? "all checks passed" : "some checks failed") << "\n";
    return all ? kExitOk : kExitValidationFailed;
}

int report_command(const Options& o, std::ostream& out) {
    std::optional<std::filesystem::path> dir;
    if (!o.out_dir.empty()) dir = o.out_dir;
    const auto path = report_from_csv(o.in, dir, o.window);
    out << "wrote " << path.string() << "\n";
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Personalized federated linear stochastic approximation experiments", "affpcl"};
    app.require_subcommand(1, 1);
    Options o;

    auto add_exec_flags = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file")->required();
        sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed-override", o.seed_override, "run a single seed instead of the configured list");
        sub->add_option("--threads", o.threads, "worker threads, 0 = auto")->capture_default_str();
        sub->add_option("--record-every", o.record_every, "record metrics every k rounds")
            ->check(CLI::PositiveNumber);
    };
    CLI::App* run = app.add_subcommand("run", "run every panel and seed of a run config");
    add_exec_flags(run);
    CLI::App* sw = app.add_subcommand("sweep", "run a grid sweep");
    add_exec_flags(sw);
    CLI::App* val = app.add_subcommand("validate", "check the invariant suite");
    val->add_flag("--quick", o.quick, "smaller sample sizes");
    val->add_option("--seed", o.validate_seed, "master seed")->capture_default_str();
    CLI::App* rep = app.add_subcommand("report", "recompute summary.json from metrics.csv");
    rep->add_option("--in", o.in, "metrics.csv path")->required()->check(CLI::ExistingFile);
    std::string report_out;
    rep->add_option("--out-dir", report_out, "directory for summary.json (default: next to the csv)");
    rep->add_option("--window", o.window, "trailing records per summary")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (*run) return run_command(o, out);
        if (*sw) return sweep_command(o, out);
        if (*val) return validate_command(o, out);
        o.out_dir = report_out;
        return report_command(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const InvalidConfig& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args;
    for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace affpcl
