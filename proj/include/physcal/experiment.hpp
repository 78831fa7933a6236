#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "physcal/active_learning.hpp"

namespace physcal {

inline constexpr int kSummarySchemaVersion = 1;

enum class PoolGeneration { uniform, grid };

struct ExperimentConfig {
    std::string problem = "benchmark_2d";
    std::optional<double> xi;  // overrides the problem threshold
    std::optional<double> noise_f;
    std::optional<double> noise_h;

    int pool_size = 400;
    PoolGeneration pool_generation = PoolGeneration::uniform;
    int init_size = 10;
    int lhd_restarts = 100;
    int test_size = 100;

    std::vector<Strategy> strategies;
    int N = 20;
    int replications = 10;
    std::uint64_t seed = 1;
    std::map<int, std::uint64_t> replication_seeds;  // explicit per-replication seeds

    RunOptions run;  // fit, refit cadence, fallback; on_scores is ignored
    int jobs = 0;    // 0 = hardware concurrency
    std::string output_dir = "results";
    bool write_traces = true;

    void validate() const;
    std::uint64_t replication_seed(int replication) const;
};

// Strict parser: unknown keys throw ConfigError. Every strategy inherits the
// top-level "safety" and "acquisition" blocks unless it overrides them.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Reads a JSON config file and applies PHYSCAL_OUTPUT_DIR and PHYSCAL_JOBS.
ExperimentConfig load_config(const std::string& path);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    int add_failures = 0;
};

// Errors of the target-model mean on the test set, and failures among the
// active queries only.
Metrics compute_metrics(const RunTrace& trace, const GPModel& target_model, const TestSet& test);

struct ModelSnapshot {
    std::vector<double> lengthscales;
    double signal_variance = 0.0;
    double nugget = 0.0;
    double mean_offset = 0.0;

    bool operator==(const ModelSnapshot&) const = default;
};

struct RunSummary {
    std::string strategy;
    int replication = 0;
    std::uint64_t seed = 0;
    std::string status;
    std::string message;
    double mae = 0.0;
    double mse = 0.0;
    int add_failures = 0;
    int queries = 0;
    int fallbacks = 0;
    int init_failures = 0;
    int oracle_calls = 0;
    std::string trace_file;
    ModelSnapshot target_model;
    ModelSnapshot constraint_model;

    bool operator==(const RunSummary&) const = default;
};

struct StrategyAggregate {
    std::string strategy;
    int runs = 0;
    double mean_mae = 0.0, std_mae = 0.0;
    double mean_mse = 0.0, std_mse = 0.0;
    double mean_failures = 0.0, std_failures = 0.0;
    int zero_failure_runs = 0;
    int aborted_runs = 0;

    bool operator==(const StrategyAggregate&) const = default;
};

struct SummaryReport {
    int schema_version = kSummarySchemaVersion;
    std::string problem;
    int N = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> strategies;  // column order
    std::vector<RunSummary> runs;         // replication-major, strategy order within
    std::vector<StrategyAggregate> aggregates;

    const RunSummary* find(const std::string& strategy, int replication) const;
    const StrategyAggregate* aggregate(const std::string& strategy) const;
    bool operator==(const SummaryReport&) const = default;
};

// Sample mean and standard deviation (n - 1); std is 0 for fewer than two runs.
std::vector<StrategyAggregate> aggregate_runs(const std::vector<RunSummary>& runs,
                                              const std::vector<std::string>& strategies);

struct ExperimentSetup {
    ProblemSpec problem;
    CandidatePool pool;
    TestSet test;
};

// Problem with overrides applied, the shared candidate pool and test set.
ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

// Observed maximin LHD for one replication.
LabeledData initial_design(const ExperimentConfig& cfg, const ProblemSpec& problem, int replication);

// Runs every (replication, strategy) pair. Writes traces/<strategy>_rep<r>.csv
// and summary.json under output_dir when `write_files` is set. Run failures
// are recorded with status "aborted".
SummaryReport run_experiment(const ExperimentConfig& cfg, bool write_files = true);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    double value = 0.0;
    SummaryReport summary;
};

struct SweepReport {
    std::string param;
    std::vector<SweepRow> rows;
};

// Supported parameters: w, alpha, power, p_plus, gamma (PhysCAL strategies)
// and N (all strategies). Each value writes its own subdirectory.
SweepReport run_sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<double>& values,
                      bool write_files = true);
ExperimentConfig apply_sweep_value(ExperimentConfig cfg, const std::string& param, double value);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { json, csv, markdown };
ReportFormat report_format_from_string(const std::string& s);

nlohmann::json summary_to_json(const SummaryReport& s);
SummaryReport summary_from_json(const nlohmann::json& j);

// One row per replication, columns MAE / MSE / # Add. Fail per strategy, then
// Mean and (Std.) footer rows.
std::string render_markdown(const SummaryReport& s);
std::string render_csv(const SummaryReport& s);
std::string render_json(const SummaryReport& s);
std::string render(const SummaryReport& s, ReportFormat format);

// Per-value mean MSE, mean failures and zero-failure count for each strategy.
std::string render_sweep_markdown(const SweepReport& r);
nlohmann::json sweep_to_json(const SweepReport& r);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace physcal
