#include "affpcl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "affpcl/config.hpp"
#include "affpcl/errors.hpp"
#include "affpcl/tdapp.hpp"

namespace affpcl {

void validate(const RunConfig& cfg) {
    validate(cfg.instance);
    validate(cfg.schedule);
    if (cfg.t_max < 1) throw InvalidConfig("t_max must be >= 1");
    if (cfg.seeds.empty()) throw InvalidConfig("seeds must be non-empty");
    if (cfg.record_every < 1) throw InvalidConfig("record_every must be >= 1");
    if (cfg.summary_window < 1) throw InvalidConfig("summary_window must be >= 1");
    if (cfg.algorithms.empty()) throw InvalidConfig("algorithms must be non-empty");
    if (!(cfg.dre_alpha > 0.0)) throw InvalidConfig("dre_alpha must be > 0");
    if (cfg.reference.kind == ReferenceMode::Kind::monte_carlo && cfg.reference.samples < 1)
        throw InvalidConfig("monte_carlo reference needs samples >= 1");
    if (cfg.nu_samples != 0 && cfg.nu_samples < 100) throw InvalidConfig("nu_samples must be 0 or >= 100");
    std::vector<std::string> labels;
    for (const auto& a : cfg.algorithms) {
        const std::string label = algorithm_label(a);
        if (std::find(labels.begin(), labels.end(), label) != labels.end())
            throw InvalidConfig("algorithm '" + label + "' listed twice");
        labels.push_back(label);
    }
    std::vector<std::string> names;
    for (const auto& p : cfg.panels) {
        if (std::find(names.begin(), names.end(), p.name) != names.end())
            throw InvalidConfig("panel '" + p.name + "' listed twice");
        names.push_back(p.name);
        InstanceConfig ic = cfg.instance;
        if (p.delta_env) ic.delta_env = *p.delta_env;
        if (p.delta_obj) ic.delta_obj = *p.delta_obj;
        if (p.n) ic.n = *p.n;
        validate(ic);
    }
}

void validate(const SweepConfig& cfg) {
    validate(cfg.base);
    if (!cfg.base.panels.empty()) throw InvalidConfig("sweep base config must not define panels");
    if (!cfg.delta.empty() && (!cfg.delta_env.empty() || !cfg.delta_obj.empty()))
        throw InvalidConfig("grid.delta excludes grid.delta_env and grid.delta_obj");
    if (cfg.delta.empty() && cfg.delta_env.empty() && cfg.delta_obj.empty() && cfg.n.empty())
        throw InvalidConfig("grid must have at least one axis");
    if (cfg.primary &&
        std::find(cfg.base.algorithms.begin(), cfg.base.algorithms.end(), *cfg.primary) == cfg.base.algorithms.end())
        throw InvalidConfig("primary algorithm is not among base.algorithms");
}

std::string algorithm_label(const AlgorithmId& id) {
    std::string label = to_string(id.kind);
    if (id.kind != AlgorithmKind::affpcl_full) return label;
    if (id.cdl != CdlVariant::v1) label += "_" + to_string(id.cdl);
    if (id.dre != DreMode::exact) label += "_" + to_string(id.dre);
    return label;
}

Instance make_instance(const InstanceConfig& cfg) {
    switch (cfg.family) {
        case Family::gaussian: return generate_gaussian_instance(cfg);
        case Family::tabular: return generate_tabular_instance(cfg);
        case Family::mrp: return generate_mrp_instance(cfg);
    }
    throw InvalidConfig("unknown family");
}

InstanceConfig seeded_instance_config(const InstanceConfig& base, std::uint64_t run_seed) {
    InstanceConfig c = base;
    c.seed = derive_seed(base.seed, "instance", run_seed);
    return c;
}

namespace {

struct StepPlan {
    std::vector<StepSchedule> agent;
    StepSchedule central;
    StepSchedule objective;
    double dre = 0.0;

    StepPlan(const RunConfig& cfg, const Instance& inst) : dre(cfg.dre_alpha) {
        for (double lam : inst.lambdas.agent) agent.push_back(bind_lambda(cfg.schedule, lam));
        central = bind_lambda(cfg.schedule, inst.lambdas.central);
        objective = bind_lambda(cfg.schedule, inst.lambdas.objective);
    }

    RoundSteps at(std::size_t tau) const {
        const double t = static_cast<double>(tau);
        RoundSteps s;
        for (const auto& a : agent) s.per_agent.push_back(step_size(a, t));
        s.local = s.per_agent.front();
        s.central = step_size(central, t);
        s.objective = step_size(objective, t);
        s.dre = dre;
        return s;
    }
};

std::vector<MetricsRecord> run_algorithm(const RunConfig& cfg, const Instance& inst, const AlgorithmId& id,
                                         std::uint64_t seed, const std::string& run_id,
                                         const std::vector<Vector>& targets, std::size_t center) {
    check_compatible(id, inst);
    const StepPlan plan(cfg, inst);
    const std::uint64_t sample_seed = derive_seed(seed, "samples");
    const bool tracks_theta = id.kind == AlgorithmKind::affpcl_full;
    LearnerState state = LearnerState::zeros(inst);
    std::vector<TailAverager> avg;
    if (cfg.schedule.tail_average) avg.assign(inst.n(), TailAverager(cfg.schedule.t0));
    std::vector<MetricsRecord> out;
    out.reserve((cfg.t_max + cfg.record_every - 1) / cfg.record_every);
    for (std::size_t t = 0; t < cfg.t_max; ++t) {
        if (!avg.empty())
            for (std::size_t i = 0; i < inst.n(); ++i) avg[i].push(state.x[i]);
        if (t % cfg.record_every == 0) {
            MetricsRecord rec;
            if (avg.empty()) {
                rec = make_record(run_id, seed, id, state, targets, center);
            } else {
                LearnerState view = state;
                for (std::size_t i = 0; i < inst.n(); ++i) view.x[i] = avg[i].value();
                rec = make_record(run_id, seed, id, view, targets, center);
            }
            if (tracks_theta) rec.theta_error = (state.theta_c - inst.theta_star_c).squared_norm();
            out.push_back(std::move(rec));
        }
        state = algorithm_round(inst, id, std::move(state), sample_seed, plan.at(t));
    }
    return out;
}

}  // namespace

SeedRun run_seed(const RunConfig& cfg, const InstanceConfig& instance, std::uint64_t seed,
                 const std::string& run_id, bool full_report) {
    try {
        const Instance inst = make_instance(seeded_instance_config(instance, seed));
        ReportOptions ropts;
        ropts.nu_samples = full_report ? cfg.nu_samples : 0;
        ropts.tv_samples = cfg.tv_samples;
        ropts.seed = derive_seed(seed, "report");
        HeterogeneityReport report = heterogeneity_report(inst, ropts);

        SeedRun run;
        run.center = center_agent(report);
        std::vector<Vector> targets;
        if (cfg.reference.kind == ReferenceMode::Kind::analytic) {
            targets = inst.x_star;
        } else {
            ReferenceMode mode = cfg.reference;
            mode.seed = seed;
            for (std::size_t i = 0; i < inst.n(); ++i) targets.push_back(reference_solution(inst, i, mode));
        }
        for (const auto& id : cfg.algorithms) {
            auto recs = run_algorithm(cfg, inst, id, seed, run_id, targets, run.center);
            std::move(recs.begin(), recs.end(), std::back_inserter(run.records));
        }
        if (full_report) run.report = std::move(report);
        return run;
    } catch (const Error& e) {
        throw Error("seed " + std::to_string(seed) + ": " + e.what());
    }
}

namespace {

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) fn(k);
        });
    for (auto& th : pool) th.join();
}

struct PanelSpec {
    std::string name;
    InstanceConfig instance;
};

std::vector<PanelSpec> resolve_panels(const RunConfig& cfg, const std::vector<Panel>& panels) {
    std::vector<PanelSpec> out;
    if (panels.empty()) {
        out.push_back({cfg.name, cfg.instance});
        return out;
    }
    for (const auto& p : panels) {
        InstanceConfig ic = cfg.instance;
        if (p.delta_env) ic.delta_env = *p.delta_env;
        if (p.delta_obj) ic.delta_obj = *p.delta_obj;
        if (p.n) ic.n = *p.n;
        out.push_back({p.name, ic});
    }
    return out;
}

struct TaskOutcome {
    std::optional<SeedRun> run;
    std::optional<std::string> error;
};

// Runs every (panel, seed) task. With `keep_going`, failures are captured per
// task instead of aborting.
std::vector<TaskOutcome> execute(const RunConfig& cfg, const std::vector<PanelSpec>& panels,
                                 const ExecOptions& exec, bool keep_going) {
    const std::size_t seeds = cfg.seeds.size();
    const std::size_t count = panels.size() * seeds;
    std::vector<TaskOutcome> outcomes(count);
    std::mutex progress_mutex;
    std::atomic<std::size_t> done{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    parallel_for(count, exec.threads, [&](std::size_t k) {
        const PanelSpec& panel = panels[k / seeds];
        const std::uint64_t seed = cfg.seeds[k % seeds];
        try {
            outcomes[k].run = run_seed(cfg, panel.instance, seed, panel.name, k % seeds == 0);
        } catch (const std::exception& e) {
            if (!keep_going) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
            outcomes[k].error = e.what();
        }
        const std::size_t finished = ++done;
        if (exec.progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            exec.progress("[" + std::to_string(finished) + "/" + std::to_string(count) + "] " + panel.name +
                          " seed " + std::to_string(seed) + (outcomes[k].error ? " FAILED" : " done"));
        }
    });
    if (first_error) {
        // Report the failure of the lowest task index for a deterministic message.
        for (const auto& o : outcomes)
            if (o.error) throw Error(*o.error);
    }
    return outcomes;
}

PanelResult merge_panel(const RunConfig& cfg, const PanelSpec& spec, std::vector<TaskOutcome>::iterator first) {
    PanelResult panel;
    panel.name = spec.name;
    panel.instance = spec.instance;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        SeedRun& run = *first[s].run;
        if (s == 0 && run.report) panel.heterogeneity = std::move(*run.report);
        panel.centers.push_back(run.center);
        std::move(run.records.begin(), run.records.end(), std::back_inserter(panel.records));
    }
    panel.summaries = summarize(panel.records, cfg.summary_window);
    return panel;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const ExecOptions& exec) {
    validate(cfg);
    const auto panels = resolve_panels(cfg, cfg.panels);
    auto outcomes = execute(cfg, panels, exec, false);
    RunResult result;
    result.config = cfg;
    for (std::size_t p = 0; p < panels.size(); ++p)
        result.panels.push_back(merge_panel(cfg, panels[p], outcomes.begin() + static_cast<std::ptrdiff_t>(p * cfg.seeds.size())));
    return result;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(q * static_cast<double>(values.size()) - 1e-9);
    const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, static_cast<double>(values.size() - 1)));
    return values[idx];
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < order.size();) {
        std::size_t m = k;
        while (m + 1 < order.size() && v[order[m + 1]] == v[order[k]]) ++m;
        const double avg = 0.5 * static_cast<double>(k + m) + 1.0;
        for (std::size_t q = k; q <= m; ++q) r[order[q]] = avg;
        k = m + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidConfig("spearman needs two equal-length samples of size >= 2");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = mean_of(rx);
    const double my = mean_of(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (rx[k] - mx) * (ry[k] - my);
        sxx += (rx[k] - mx) * (rx[k] - mx);
        syy += (ry[k] - my) * (ry[k] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<AlgorithmSummary> summarize(const std::vector<MetricsRecord>& records, std::size_t window) {
    // label -> seed -> records, both in first-seen order.
    std::vector<std::string> labels;
    std::map<std::string, AlgorithmId> ids;
    std::map<std::string, std::vector<std::uint64_t>> seed_order;
    std::map<std::pair<std::string, std::uint64_t>, std::vector<const MetricsRecord*>> groups;
    for (const auto& r : records) {
        const std::string label = algorithm_label(r.algorithm);
        if (!ids.count(label)) {
            labels.push_back(label);
            ids[label] = r.algorithm;
        }
        auto& group = groups[{label, r.seed}];
        if (group.empty()) seed_order[label].push_back(r.seed);
        group.push_back(&r);
    }

    std::vector<AlgorithmSummary> out;
    for (const auto& label : labels) {
        AlgorithmSummary s;
        s.id = ids[label];
        s.label = label;
        bool have_center = true;
        bool have_theta = true;
        for (std::uint64_t seed : seed_order[label]) {
            const auto& group = groups[{label, seed}];
            const std::size_t take = std::min(window, group.size());
            double mse = 0.0, center = 0.0, generic = 0.0, theta = 0.0;
            for (std::size_t k = group.size() - take; k < group.size(); ++k) {
                const MetricsRecord& r = *group[k];
                mse += r.mse0;
                if (r.center == kAggregate) {
                    have_center = false;
                } else {
                    center += r.center_error;
                    const std::size_t n = r.agent_error.size();
                    generic += n > 1 ? (r.mse0 * static_cast<double>(n) - r.center_error) / static_cast<double>(n - 1)
                                     : r.center_error;
                }
                if (r.theta_error) {
                    theta += *r.theta_error;
                } else {
                    have_theta = false;
                }
            }
            const double inv = 1.0 / static_cast<double>(take);
            s.per_seed.push_back(mse * inv);
            s.per_seed_center.push_back(center * inv);
            s.per_seed_generic.push_back(generic * inv);
            s.per_seed_coe.push_back(theta * inv);
        }
        s.final_mean = mean_of(s.per_seed);
        s.p5 = percentile(s.per_seed, 0.05);
        s.p95 = percentile(s.per_seed, 0.95);
        if (have_center) {
            s.center_agent_mse = mean_of(s.per_seed_center);
            s.generic_agent_mse = mean_of(s.per_seed_generic);
        } else {
            s.per_seed_center.clear();
            s.per_seed_generic.clear();
        }
        if (have_theta) {
            s.coe_mse = mean_of(s.per_seed_coe);
        } else {
            s.per_seed_coe.clear();
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Panel> sweep_panels(const SweepConfig& cfg) {
    const InstanceConfig& base = cfg.base.instance;
    std::vector<std::pair<double, double>> deltas;
    if (!cfg.delta.empty()) {
        for (double d : cfg.delta) deltas.emplace_back(d, d);
    } else {
        const std::vector<double> envs = cfg.delta_env.empty() ? std::vector<double>{base.delta_env} : cfg.delta_env;
        const std::vector<double> objs = cfg.delta_obj.empty() ? std::vector<double>{base.delta_obj} : cfg.delta_obj;
        for (double e : envs)
            for (double o : objs) deltas.emplace_back(e, o);
    }
    const std::vector<std::size_t> ns = cfg.n.empty() ? std::vector<std::size_t>{base.n} : cfg.n;
    std::vector<Panel> out;
    char buf[128];
    for (const auto& [env, obj] : deltas)
        for (std::size_t n : ns) {
            std::snprintf(buf, sizeof buf, "env=%g_obj=%g_n=%zu", env, obj, n);
            out.push_back(Panel{buf, env, obj, n});
        }
    return out;
}

SweepResult sweep(const SweepConfig& cfg, const ExecOptions& exec) {
    validate(cfg);
    const std::vector<Panel> grid = sweep_panels(cfg);
    const auto panels = resolve_panels(cfg.base, grid);
    auto outcomes = execute(cfg.base, panels, exec, true);
    const AlgorithmId primary = cfg.primary.value_or(cfg.base.algorithms.front());
    const std::string primary_label = algorithm_label(primary);
    const std::size_t seeds = cfg.base.seeds.size();

    SweepResult result;
    result.config = cfg;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        GridPoint point;
        point.delta_env = panels[p].instance.delta_env;
        point.delta_obj = panels[p].instance.delta_obj;
        point.n = panels[p].instance.n;
        const auto first = outcomes.begin() + static_cast<std::ptrdiff_t>(p * seeds);
        for (std::size_t s = 0; s < seeds; ++s)
            if (first[s].error && !point.error) point.error = *first[s].error;
        if (point.error) {
            result.points.push_back(std::move(point));
            continue;
        }
        PanelResult panel = merge_panel(cfg.base, panels[p], first);
        point.summaries = panel.summaries;
        const auto pit = std::find_if(point.summaries.begin(), point.summaries.end(),
                                      [&](const AlgorithmSummary& s) { return s.label == primary_label; });
        for (const auto& s : point.summaries)
            if (s.label != primary_label) point.improvement.emplace_back(s.label, s.final_mean / pit->final_mean);
        const double delta = cfg.delta.empty() ? std::max(point.delta_env, point.delta_obj) : point.delta_env;
        result.contour.push_back({1.0 / static_cast<double>(point.n), delta, pit->final_mean});
        if (cfg.write_metrics) result.panels.push_back(std::move(panel));
        result.points.push_back(std::move(point));
    }
    return result;
}

std::string metrics_csv_header() { return "run_id,seed,algorithm,cdl_variant,dre_mode,t,agent_id,squared_error"; }

namespace {

// Shortest representation that parses back to the same double.
std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string() + ": cannot create directory: " + ec.message());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError(tmp.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

std::string metrics_csv_text(const std::vector<MetricsRecord>& records) {
    std::string out = metrics_csv_header() + "\n";
    for (const auto& r : records) {
        const std::string prefix = csv_field(r.run_id) + "," + std::to_string(r.seed) + "," +
                                   to_string(r.algorithm.kind) + "," + to_string(r.algorithm.cdl) + "," +
                                   to_string(r.algorithm.dre) + "," + std::to_string(r.t) + ",";
        for (std::size_t i = 0; i < r.agent_error.size(); ++i)
            out += prefix + std::to_string(i) + "," + format_real(r.agent_error[i]) + "\n";
        out += prefix + "-1," + format_real(r.mse0) + "\n";
    }
    return out;
}

void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path) {
    write_file_atomic(path, metrics_csv_text(records));
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != metrics_csv_header())
        throw IoError(path.string() + ": unexpected header");
    std::vector<MetricsRecord> out;
    MetricsRecord cur;
    bool open = false;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 8) throw IoError(path.string() + ": line " + std::to_string(lineno) + ": expected 8 columns");
        try {
            AlgorithmId id{algorithm_kind_from_string(cells[2]), cdl_variant_from_string(cells[3]),
                           dre_mode_from_string(cells[4])};
            const std::uint64_t seed = std::stoull(cells[1]);
            const std::size_t t = std::stoull(cells[5]);
            const long long agent = std::stoll(cells[6]);
            const double value = std::strtod(cells[7].c_str(), nullptr);
            if (!open) {
                cur = MetricsRecord{};
                cur.run_id = cells[0];
                cur.seed = seed;
                cur.algorithm = id;
                cur.t = t;
                open = true;
            } else if (cur.run_id != cells[0] || cur.seed != seed || !(cur.algorithm == id) || cur.t != t) {
                throw IoError("record interrupted before its aggregate row");
            }
            if (agent == -1) {
                cur.mse0 = value;
                out.push_back(std::move(cur));
                open = false;
            } else if (agent == static_cast<long long>(cur.agent_error.size())) {
                cur.agent_error.push_back(value);
            } else {
                throw IoError("agent rows out of order");
            }
        } catch (const IoError& e) {
            throw IoError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::exception& e) {
            throw IoError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (open) throw IoError(path.string() + ": truncated record at end of file");
    return out;
}

namespace {

Json contour_json(const std::vector<ContourPoint>& pts) {
    Json arr = Json::array();
    for (const auto& c : pts) arr.push_back(Json{{"inv_n", c.inv_n}, {"delta", c.delta}, {"value", c.value}});
    return arr;
}

Json per_algorithm_json(const std::vector<AlgorithmSummary>& summaries) {
    Json j = Json::object();
    for (const auto& s : summaries) j[s.label] = to_json(s);
    return j;
}

const AlgorithmSummary* primary_summary(const std::vector<AlgorithmSummary>& summaries) {
    for (const auto& s : summaries)
        if (s.id.kind == AlgorithmKind::affpcl_full || s.id.kind == AlgorithmKind::affpcl_known) return &s;
    return summaries.empty() ? nullptr : &summaries.front();
}

Json centers_json(const std::vector<std::uint64_t>& seeds, const std::vector<std::size_t>& centers) {
    Json j = Json::object();
    for (std::size_t k = 0; k < centers.size(); ++k) j[std::to_string(seeds[k])] = centers[k];
    return j;
}

Json panel_summary(const RunConfig& cfg, const PanelResult& panel) {
    Json config = to_json(cfg);
    config["panel"] = Json{{"name", panel.name}, {"instance", to_json(panel.instance)}};
    std::vector<ContourPoint> contour;
    if (const auto* p = primary_summary(panel.summaries))
        contour.push_back({1.0 / static_cast<double>(panel.instance.n),
                           std::max(panel.instance.delta_env, panel.instance.delta_obj), p->final_mean});
    return Json{{"config", config},
                {"heterogeneity", to_json(panel.heterogeneity)},
                {"per_algorithm", per_algorithm_json(panel.summaries)},
                {"contour", contour_json(contour)},
                {"centers", centers_json(cfg.seeds, panel.centers)}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

void persist(const RunResult& result, const std::filesystem::path& out_dir) {
    if (result.panels.size() == 1 && result.config.panels.empty()) {
        const PanelResult& p = result.panels.front();
        write_metrics_csv(p.records, out_dir / "metrics.csv");
        write_file_atomic(out_dir / "summary.json", dump(panel_summary(result.config, p)));
        return;
    }
    Json heterogeneity = Json::object();
    Json per_algorithm = Json::object();
    std::vector<ContourPoint> contour;
    for (const auto& p : result.panels) {
        write_metrics_csv(p.records, out_dir / p.name / "metrics.csv");
        write_file_atomic(out_dir / p.name / "summary.json", dump(panel_summary(result.config, p)));
        heterogeneity[p.name] = to_json(p.heterogeneity);
        per_algorithm[p.name] = per_algorithm_json(p.summaries);
        if (const auto* s = primary_summary(p.summaries))
            contour.push_back({1.0 / static_cast<double>(p.instance.n),
                               std::max(p.instance.delta_env, p.instance.delta_obj), s->final_mean});
    }
    write_file_atomic(out_dir / "summary.json", dump(Json{{"config", to_json(result.config)},
                                                          {"heterogeneity", heterogeneity},
                                                          {"per_algorithm", per_algorithm},
                                                          {"contour", contour_json(contour)}}));
}

void persist(const SweepResult& result, const std::filesystem::path& out_dir) {
    Json grid = Json::array();
    std::string table = "delta_env,delta_obj,n,algorithm,final_mean,p5,p95,improvement\n";
    const std::string primary_label =
        algorithm_label(result.config.primary.value_or(result.config.base.algorithms.front()));
    for (const auto& pt : result.points) {
        Json entry{{"delta_env", pt.delta_env}, {"delta_obj", pt.delta_obj}, {"n", pt.n}};
        if (pt.error) {
            entry["error"] = *pt.error;
            grid.push_back(entry);
            continue;
        }
        entry["per_algorithm"] = per_algorithm_json(pt.summaries);
        Json imp = Json::object();
        for (const auto& [label, ratio] : pt.improvement) imp[label] = ratio;
        entry["improvement"] = imp;
        grid.push_back(entry);
        for (const auto& s : pt.summaries) {
            double ratio = 1.0;
            for (const auto& [label, r] : pt.improvement)
                if (label == s.label) ratio = r;
            table += format_real(pt.delta_env) + "," + format_real(pt.delta_obj) + "," + std::to_string(pt.n) + "," +
                     s.label + "," + format_real(s.final_mean) + "," + format_real(s.p5) + "," + format_real(s.p95) +
                     "," + format_real(ratio) + "\n";
        }
    }
    write_file_atomic(out_dir / "sweep.csv", table);
    for (const auto& p : result.panels) write_metrics_csv(p.records, out_dir / p.name / "metrics.csv");
    write_file_atomic(out_dir / "summary.json", dump(Json{{"config", to_json(result.config)},
                                                          {"heterogeneity", nullptr},
                                                          {"per_algorithm", Json{{"primary", primary_label}, {"grid", grid}}},
                                                          {"contour", contour_json(result.contour)}}));
}

std::filesystem::path report_from_csv(const std::filesystem::path& metrics_csv,
                                      const std::optional<std::filesystem::path>& out_dir,
                                      std::optional<std::size_t> window) {
    std::vector<MetricsRecord> records = read_metrics_csv(metrics_csv);
    const std::filesystem::path dir = metrics_csv.has_parent_path() ? metrics_csv.parent_path() : ".";
    const std::filesystem::path sibling = dir / "summary.json";
    Json config{{"metrics_csv", metrics_csv.filename().string()}};
    Json heterogeneity = nullptr;
    Json centers = Json::object();
    std::size_t use_window = window.value_or(10);
    if (std::filesystem::exists(sibling)) {
        const Json old = load_json_file(sibling);
        if (old.contains("config") && old["config"].is_object()) {
            config = old["config"];
            if (!window && config.contains("summary_window") && config["summary_window"].is_number_unsigned())
                use_window = config["summary_window"].get<std::size_t>();
        }
        if (old.contains("heterogeneity")) heterogeneity = old["heterogeneity"];
        if (old.contains("centers") && old["centers"].is_object()) centers = old["centers"];
    }
    if (use_window < 1) throw InvalidConfig("summary window must be >= 1");
    for (auto& r : records) {
        const std::string key = std::to_string(r.seed);
        if (centers.contains(key) && centers[key].is_number_unsigned()) {
            r.center = centers[key].get<std::size_t>();
            if (r.center >= r.agent_error.size()) throw IoError(sibling.string() + ": center agent out of range");
            r.center_error = r.agent_error[r.center];
        }
    }
    const auto summaries = summarize(records, use_window);
    std::vector<ContourPoint> contour;
    if (const auto* p = primary_summary(summaries); p && !records.empty() && config.contains("panel")) {
        const Json& inst = config["panel"]["instance"];
        contour.push_back({1.0 / inst["n"].get<double>(),
                           std::max(inst["delta_env"].get<double>(), inst["delta_obj"].get<double>()), p->final_mean});
    }
    Json out{{"config", config},
             {"heterogeneity", heterogeneity},
             {"per_algorithm", per_algorithm_json(summaries)},
             {"contour", contour_json(contour)},
             {"centers", centers}};
    const std::filesystem::path target = (out_dir ? *out_dir : dir) / "summary.json";
    write_file_atomic(target, dump(out));
    return target;
}

}  // namespace affpcl
