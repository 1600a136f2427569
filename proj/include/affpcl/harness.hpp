#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "affpcl/algorithms.hpp"
#include "affpcl/metrics.hpp"
#include "affpcl/model.hpp"
#include "affpcl/schedules.hpp"

namespace affpcl {

// A named variation of the base instance. Unset fields keep the base value.
struct Panel {
    std::string name;
    std::optional<double> delta_env;
    std::optional<double> delta_obj;
    std::optional<std::size_t> n;

    bool operator==(const Panel&) const = default;
};

struct RunConfig {
    std::string name = "run";
    InstanceConfig instance;
    std::vector<AlgorithmId> algorithms{AlgorithmId{}};
    StepSchedule schedule = StepSchedule::fixed(0.01);
    double dre_alpha = 0.01;
    std::size_t t_max = 60;
    std::vector<std::uint64_t> seeds{0};
    ReferenceMode reference;
    std::size_t record_every = 1;
    std::size_t summary_window = 10;
    std::vector<Panel> panels;  // empty: a single run of `instance`
    std::size_t nu_samples = 2000;
    std::size_t tv_samples = 20000;

    bool operator==(const RunConfig&) const = default;
};

struct SweepConfig {
    RunConfig base;
    // Grid axes; an empty axis keeps the base value. `delta` sets delta_env
    // and delta_obj together and excludes the two separate axes.
    std::vector<double> delta_env;
    std::vector<double> delta_obj;
    std::vector<double> delta;
    std::vector<std::size_t> n;
    // The personalized method whose summary feeds improvement ratios and
    // contour triples; defaults to the first algorithm.
    std::optional<AlgorithmId> primary;
    bool write_metrics = false;
};

// Throws InvalidConfig on violated invariants.
void validate(const RunConfig& cfg);
void validate(const SweepConfig& cfg);

std::string algorithm_label(const AlgorithmId& id);

// Instance for one seed of a config: the base seed and the run seed are
// hashed together.
Instance make_instance(const InstanceConfig& cfg);
InstanceConfig seeded_instance_config(const InstanceConfig& base, std::uint64_t run_seed);

struct AlgorithmSummary {
    AlgorithmId id;
    std::string label;
    // Per seed means over the last `summary_window` records.
    std::vector<double> per_seed;
    std::vector<double> per_seed_center;
    std::vector<double> per_seed_generic;
    std::vector<double> per_seed_coe;
    double final_mean = 0.0;
    double p5 = 0.0;
    double p95 = 0.0;
    std::optional<double> center_agent_mse;
    std::optional<double> generic_agent_mse;
    std::optional<double> coe_mse;
};

struct PanelResult {
    std::string name;
    InstanceConfig instance;
    std::vector<MetricsRecord> records;  // seed-major, then algorithm, then t
    std::vector<AlgorithmSummary> summaries;
    std::vector<std::size_t> centers;    // per seed
    HeterogeneityReport heterogeneity;   // of the first seed's instance
};

struct RunResult {
    RunConfig config;
    std::vector<PanelResult> panels;
};

struct ExecOptions {
    std::size_t threads = 0;  // 0: hardware concurrency
    std::function<void(const std::string&)> progress;
};

// One seed of one panel: all algorithms on a shared instance with common
// random numbers. Errors are rethrown annotated with the seed.
struct SeedRun {
    std::vector<MetricsRecord> records;
    std::size_t center = 0;
    std::optional<HeterogeneityReport> report;
};
SeedRun run_seed(const RunConfig& cfg, const InstanceConfig& instance, std::uint64_t seed,
                 const std::string& run_id, bool full_report);

RunResult run_experiment(const RunConfig& cfg, const ExecOptions& exec = {});

// Summary over the records of one panel.
std::vector<AlgorithmSummary> summarize(const std::vector<MetricsRecord>& records,
                                        std::size_t window);

// Order-statistic percentile: the ceil(q m)-th smallest value.
double percentile(std::vector<double> values, double q);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct GridPoint {
    double delta_env = 0.0;
    double delta_obj = 0.0;
    std::size_t n = 0;
    std::vector<AlgorithmSummary> summaries;
    // baseline label -> MSE(baseline) / MSE(primary)
    std::vector<std::pair<std::string, double>> improvement;
    std::optional<std::string> error;
};

struct ContourPoint {
    double inv_n = 0.0;
    double delta = 0.0;
    double value = 0.0;
};

struct SweepResult {
    SweepConfig config;
    std::vector<GridPoint> points;
    std::vector<ContourPoint> contour;
    std::vector<PanelResult> panels;  // only when write_metrics
};

std::vector<Panel> sweep_panels(const SweepConfig& cfg);
SweepResult sweep(const SweepConfig& cfg, const ExecOptions& exec = {});

// Files.
void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);
std::string metrics_csv_header();
std::string metrics_csv_text(const std::vector<MetricsRecord>& records);

// Writes metrics.csv and summary.json per panel; a multi-panel run puts each
// panel in its own subdirectory.
void persist(const RunResult& result, const std::filesystem::path& out_dir);
void persist(const SweepResult& result, const std::filesystem::path& out_dir);

// Recomputes summary.json next to `metrics_csv` (or into out_dir). Config,
// heterogeneity and center agents are carried over from an existing
// summary.json in the same directory when present, as is the summary window
// unless `window` is given.
std::filesystem::path report_from_csv(const std::filesystem::path& metrics_csv,
                                      const std::optional<std::filesystem::path>& out_dir,
                                      std::optional<std::size_t> window);

// Temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace affpcl
