#include "affpcl/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "affpcl/errors.hpp"

namespace affpcl {

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Typed access to one JSON object with path-qualified errors and a check
// that every key was consumed.
class Fields {
public:
    Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string where(const std::string& key) const { return join(path_, key); }

    double real(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (!v.is_number()) throw ConfigError(where(key), "expected a number");
        return v.get<double>();
    }

    std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        return as_uint(raw(key), where(key));
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(where(key), "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (!v.is_string()) throw ConfigError(where(key), "expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()), "unknown field");
    }

    static std::uint64_t as_uint(const Json& v, const std::string& where) {
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError(where, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Wraps enum parsers so their InvalidConfig carries the field path.
template <class F>
auto parse_name(const std::string& where, F&& parse) {
    try {
        return parse();
    } catch (const InvalidConfig& e) {
        throw ConfigError(where, e.what());
    }
}

InstanceConfig instance_from_json(const Json& j, const std::string& path) {
    Fields f(j, path);
    InstanceConfig c;
    c.n = f.uint("n", c.n);
    c.d = f.uint("d", c.d);
    if (f.has("family")) {
        const std::string name = f.text("family", "");
        c.family = parse_name(f.where("family"), [&] { return family_from_string(name); });
    }
    c.delta_env = f.real("delta_env", c.delta_env);
    c.delta_obj = f.real("delta_obj", c.delta_obj);
    c.eps_a = f.real("eps_a", c.eps_a);
    c.eps_b = f.real("eps_b", c.eps_b);
    c.c_a = f.real("c_a", c.c_a);
    c.base_scale = f.real("base_scale", c.base_scale);
    c.tabular_size = f.uint("tabular_size", c.tabular_size);
    c.gamma = f.real("gamma", c.gamma);
    c.seed = f.uint("seed", c.seed);
    f.finish();
    try {
        validate(c);
    } catch (const InvalidConfig& e) {
        throw ConfigError(path, e.what());
    }
    return c;
}

AlgorithmId algorithm_from_json(const Json& j, const std::string& path) {
    AlgorithmId id;
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        id.kind = parse_name(path, [&] { return algorithm_kind_from_string(name); });
        return id;
    }
    Fields f(j, path);
    const std::string kind = f.text("kind", to_string(id.kind));
    id.kind = parse_name(f.where("kind"), [&] { return algorithm_kind_from_string(kind); });
    const std::string cdl = f.text("cdl_variant", to_string(id.cdl));
    id.cdl = parse_name(f.where("cdl_variant"), [&] { return cdl_variant_from_string(cdl); });
    const std::string dre = f.text("dre_mode", to_string(id.dre));
    id.dre = parse_name(f.where("dre_mode"), [&] { return dre_mode_from_string(dre); });
    f.finish();
    return id;
}

StepSchedule schedule_from_json(const Json& j, const std::string& path) {
    Fields f(j, path);
    StepSchedule s;
    const std::string kind = f.text("kind", to_string(s.kind));
    s.kind = parse_name(f.where("kind"), [&] { return schedule_kind_from_string(kind); });
    s.alpha = f.real("alpha", s.alpha);
    s.horizon = f.real("horizon", s.horizon);
    s.t0 = f.real("t0", s.t0);
    if (f.has("lambda")) s.lambda = f.real("lambda", 0.0);
    s.tail_average = f.flag("tail_average", s.tail_average);
    f.finish();
    return s;
}

ReferenceMode reference_from_json(const Json& j, const std::string& path) {
    Fields f(j, path);
    ReferenceMode r;
    const std::string mode = f.text("mode", "analytic");
    if (mode == "analytic") {
        r.kind = ReferenceMode::Kind::analytic;
    } else if (mode == "monte_carlo") {
        r.kind = ReferenceMode::Kind::monte_carlo;
    } else {
        throw ConfigError(f.where("mode"), "expected 'analytic' or 'monte_carlo'");
    }
    r.samples = f.uint("samples", r.samples);
    f.finish();
    return r;
}

Panel panel_from_json(const Json& j, const std::string& path) {
    Fields f(j, path);
    Panel p;
    p.name = f.text("name", "");
    if (p.name.empty()) throw ConfigError(f.where("name"), "panel needs a non-empty name");
    if (f.has("delta_env")) p.delta_env = f.real("delta_env", 0.0);
    if (f.has("delta_obj")) p.delta_obj = f.real("delta_obj", 0.0);
    if (f.has("delta")) {
        const double d = f.real("delta", 0.0);
        p.delta_env = d;
        p.delta_obj = d;
    }
    if (f.has("n")) p.n = f.uint("n", 0);
    f.finish();
    return p;
}

std::vector<double> real_list(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_number()) throw ConfigError(where + "[" + std::to_string(k) + "]", "expected a number");
        out.push_back(v[k].get<double>());
    }
    return out;
}

std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void rethrow_invalid(const std::function<void()>& check) {
    try {
        check();
    } catch (const InvalidConfig& e) {
        throw ConfigError("", e.what());
    } catch (const InvalidHorizon& e) {
        throw ConfigError("schedule", e.what());
    }
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::string msg = e.what();
        if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
        throw ConfigError(source + ": " + line_column(text, e.byte), msg);
    }
}

Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path.string());
}

bool is_sweep_config(const Json& j) { return j.is_object() && j.contains("grid"); }

RunConfig run_config_from_json(const Json& j) {
    Fields f(j, "");
    RunConfig c;
    c.name = f.text("name", c.name);
    if (f.has("instance")) c.instance = instance_from_json(f.raw("instance"), "instance");
    if (f.has("algorithm") && f.has("algorithms"))
        throw ConfigError("algorithms", "give either 'algorithm' or 'algorithms', not both");
    if (f.has("algorithm")) c.algorithms = {algorithm_from_json(f.raw("algorithm"), "algorithm")};
    if (f.has("algorithms")) {
        const Json& list = f.raw("algorithms");
        if (!list.is_array()) throw ConfigError("algorithms", "expected an array");
        c.algorithms.clear();
        for (std::size_t k = 0; k < list.size(); ++k)
            c.algorithms.push_back(algorithm_from_json(list[k], "algorithms[" + std::to_string(k) + "]"));
    }
    if (f.has("schedule")) c.schedule = schedule_from_json(f.raw("schedule"), "schedule");
    c.dre_alpha = f.real("dre_alpha", c.dre_alpha);
    c.t_max = f.uint("t_max", c.t_max);
    if (f.has("seeds")) {
        const Json& s = f.raw("seeds");
        c.seeds.clear();
        if (s.is_array()) {
            for (std::size_t k = 0; k < s.size(); ++k)
                c.seeds.push_back(Fields::as_uint(s[k], "seeds[" + std::to_string(k) + "]"));
        } else {
            const std::uint64_t count = Fields::as_uint(s, "seeds");
            for (std::uint64_t k = 0; k < count; ++k) c.seeds.push_back(k);
        }
    }
    if (f.has("reference")) c.reference = reference_from_json(f.raw("reference"), "reference");
    c.record_every = f.uint("record_every", c.record_every);
    c.summary_window = f.uint("summary_window", c.summary_window);
    if (f.has("panels")) {
        const Json& list = f.raw("panels");
        if (!list.is_array()) throw ConfigError("panels", "expected an array");
        for (std::size_t k = 0; k < list.size(); ++k)
            c.panels.push_back(panel_from_json(list[k], "panels[" + std::to_string(k) + "]"));
    }
    c.nu_samples = f.uint("nu_samples", c.nu_samples);
    c.tv_samples = f.uint("tv_samples", c.tv_samples);
    f.finish();
    rethrow_invalid([&] { validate(c); });
    return c;
}

SweepConfig sweep_config_from_json(const Json& j) {
    Fields f(j, "");
    SweepConfig c;
    if (!f.has("base")) throw ConfigError("base", "sweep config needs a 'base' run config");
    try {
        c.base = run_config_from_json(f.raw("base"));
    } catch (const ConfigError& e) {
        throw ConfigError("base", e.what());
    }
    Fields g(f.raw("grid"), "grid");
    if (g.has("delta_env")) c.delta_env = real_list(g.raw("delta_env"), "grid.delta_env");
    if (g.has("delta_obj")) c.delta_obj = real_list(g.raw("delta_obj"), "grid.delta_obj");
    if (g.has("delta")) c.delta = real_list(g.raw("delta"), "grid.delta");
    if (g.has("n")) {
        const Json& list = g.raw("n");
        if (!list.is_array()) throw ConfigError("grid.n", "expected an array of integers");
        for (std::size_t k = 0; k < list.size(); ++k)
            c.n.push_back(Fields::as_uint(list[k], "grid.n[" + std::to_string(k) + "]"));
    }
    g.finish();
    if (f.has("primary")) c.primary = algorithm_from_json(f.raw("primary"), "primary");
    c.write_metrics = f.flag("write_metrics", c.write_metrics);
    f.finish();
    rethrow_invalid([&] { validate(c); });
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const Json j = load_json_file(path);
    if (is_sweep_config(j)) throw ConfigError(path.string(), "this is a sweep config; use the sweep command");
    try {
        return run_config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string(), e.what());
    }
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    const Json j = load_json_file(path);
    if (!is_sweep_config(j)) throw ConfigError(path.string(), "not a sweep config (missing 'grid')");
    try {
        return sweep_config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string(), e.what());
    }
}

Json to_json(const InstanceConfig& c) {
    return Json{{"n", c.n},
                {"d", c.d},
                {"family", to_string(c.family)},
                {"delta_env", c.delta_env},
                {"delta_obj", c.delta_obj},
                {"eps_a", c.eps_a},
                {"eps_b", c.eps_b},
                {"c_a", c.c_a},
                {"base_scale", c.base_scale},
                {"tabular_size", c.tabular_size},
                {"gamma", c.gamma},
                {"seed", c.seed}};
}

Json to_json(const AlgorithmId& id) {
    return Json{{"kind", to_string(id.kind)},
                {"cdl_variant", to_string(id.cdl)},
                {"dre_mode", to_string(id.dre)}};
}

Json to_json(const StepSchedule& s) {
    Json j{{"kind", to_string(s.kind)},
           {"alpha", s.alpha},
           {"horizon", s.horizon},
           {"t0", s.t0}};
    if (s.lambda) j["lambda"] = *s.lambda;
    j["tail_average"] = s.tail_average;
    return j;
}

Json to_json(const RunConfig& c) {
    Json algos = Json::array();
    for (const auto& a : c.algorithms) algos.push_back(to_json(a));
    Json panels = Json::array();
    for (const auto& p : c.panels) {
        Json pj{{"name", p.name}};
        if (p.delta_env) pj["delta_env"] = *p.delta_env;
        if (p.delta_obj) pj["delta_obj"] = *p.delta_obj;
        if (p.n) pj["n"] = *p.n;
        panels.push_back(pj);
    }
    Json reference{{"mode", c.reference.kind == ReferenceMode::Kind::analytic ? "analytic" : "monte_carlo"}};
    if (c.reference.kind == ReferenceMode::Kind::monte_carlo) reference["samples"] = c.reference.samples;
    Json j{{"name", c.name},
           {"instance", to_json(c.instance)},
           {"algorithms", algos},
           {"schedule", to_json(c.schedule)},
           {"dre_alpha", c.dre_alpha},
           {"t_max", c.t_max},
           {"seeds", c.seeds},
           {"reference", reference},
           {"record_every", c.record_every},
           {"summary_window", c.summary_window}};
    if (!c.panels.empty()) j["panels"] = panels;
    j["nu_samples"] = c.nu_samples;
    j["tv_samples"] = c.tv_samples;
    return j;
}

Json to_json(const SweepConfig& c) {
    Json grid = Json::object();
    if (!c.delta_env.empty()) grid["delta_env"] = c.delta_env;
    if (!c.delta_obj.empty()) grid["delta_obj"] = c.delta_obj;
    if (!c.delta.empty()) grid["delta"] = c.delta;
    if (!c.n.empty()) grid["n"] = c.n;
    Json j{{"base", to_json(c.base)}, {"grid", grid}};
    if (c.primary) j["primary"] = to_json(*c.primary);
    j["write_metrics"] = c.write_metrics;
    return j;
}

Json to_json(const HeterogeneityReport& r) {
    return Json{{"delta_env", r.delta_env},
                {"delta_obj", r.delta_obj},
                {"delta_cen", r.delta_cen},
                {"delta_cen_env", r.delta_cen_env},
                {"tv_standard_error", r.tv_standard_error},
                {"nu_hat", r.nu_estimated ? Json(r.nu.value) : Json(nullptr)},
                {"nu_standard_error", r.nu_estimated ? Json(r.nu.standard_error) : Json(nullptr)},
                {"effective_env", r.nu_estimated ? Json(r.effective_env) : Json(nullptr)},
                {"effective_obj", r.nu_estimated ? Json(r.effective_obj) : Json(nullptr)},
                {"effective_cen", r.nu_estimated ? Json(r.effective_cen) : Json(nullptr)},
                {"g_b", r.g_b},
                {"g_b_mean", r.g_b_mean},
                {"center_agent", center_agent(r)}};
}

Json to_json(const AlgorithmSummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    return Json{{"algorithm", to_json(s.id)},
                {"final_mean", s.final_mean},
                {"p5", s.p5},
                {"p95", s.p95},
                {"center_agent_mse", opt(s.center_agent_mse)},
                {"generic_agent_mse", opt(s.generic_agent_mse)},
                {"coe_mse", opt(s.coe_mse)},
                {"per_seed", s.per_seed}};
}

}  // namespace affpcl
