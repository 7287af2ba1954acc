#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/pipeline.hpp"
#include "guided/synth.hpp"

namespace guided {

/// One task of an experiment. A task without overrides inherits the
/// experiment-level dataset source and stage protocols.
struct TaskConfig {
    std::string name;
    std::optional<SynthSpec> synth;            // per-task generator override
    std::optional<std::string> dataset_path;   // per-task on-disk dataset
    std::optional<PipelineConfig> pipeline;    // per-task protocol override

    nlohmann::json to_json() const;
    static TaskConfig from_json(const nlohmann::json& j);
};

/// A reproducible experiment: dataset source, stage protocols, tasks and
/// seeds. Every (task, seed) pair trains one independent pipeline under
/// `output_dir/<task>/seed_<seed>/`.
struct ExperimentConfig {
    std::optional<std::string> dataset_path; // default on-disk source
    std::optional<SynthSpec> synth;          // default generated source
    PipelineConfig pipeline;                 // default stage protocols/widths
    std::vector<TaskConfig> tasks;
    std::vector<std::uint64_t> seeds;
    std::string output_dir;                  // "" -> env default (see cli)
    bool resplit_per_seed = false;           // fresh split set per run seed
    bool regenerate_per_seed = false;        // synth only: fresh draw per seed

    /// Nonempty unique tasks, nonempty seeds, exactly one resolvable dataset
    /// source per task, valid stage configs (ConfigError).
    void validate() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

struct RunRecord {
    std::string task;
    std::uint64_t seed = 0;
    std::string dir;                    // relative to the manifest directory
    std::vector<std::string> checkpoints;
    double wall_clock_sec = 0.0;
};

/// Written to `output_dir/manifest.json` after all runs complete. The config
/// echo reproduces the run bit-identically (modulo wall-clock fields).
struct RunManifest {
    int schema_version = 1;
    nlohmann::json config;              // ExperimentConfig echo
    std::vector<RunRecord> records;     // one per (task, seed)
    double total_wall_clock_sec = 0.0;

    /// One record per (task, seed) and every referenced checkpoint exists
    /// under `root` (ArtifactError / DataError).
    void validate(const std::filesystem::path& root) const;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Trains the requested stages for every (task, seed), persisting artifacts
/// per pipeline layout plus the manifest. Stages default to {1,2,3}; subsets
/// require the earlier stages' checkpoints on disk (ArtifactError).
RunManifest run_experiment(const ExperimentConfig& cfg,
                           const std::set<int>& stages = {1, 2, 3});

/// Mean/std/per-seed values of one metric for one (task, row).
struct AggregateMetric {
    double mean = 0.0;
    double stddev = 0.0;             // sample std; 0 for a single seed
    std::vector<double> values;      // in seed order
};

/// Cross-seed aggregation of the per-run reports, the unit cmd_report
/// renders. delta_pct holds delta_percent of the aggregated mean G(I)+I row
/// against the mean I row, per metric.
struct AggregateReport {
    // task -> row -> metric ("ba"/"f1"/"auroc") -> aggregate
    std::map<std::string, std::map<std::string, std::map<std::string, AggregateMetric>>> tasks;
    std::map<std::string, std::map<std::string, double>> delta_pct;

    nlohmann::json to_json() const;
    static AggregateReport from_json(const nlohmann::json& j);

    /// Lossless tabular form: task,row,metric,n,mean,std,values with
    /// %.17g numbers and semicolon-joined values.
    std::string to_csv() const;
    static AggregateReport from_csv(const std::string& csv);

    /// Fixed-width table: per-task BA and F1 columns, the five method rows
    /// as mean ± std over seeds, and the Δ% row.
    std::string to_table() const;
};

/// Loads every per-seed report.json under `run_dir` and aggregates.
/// DataError if the directory holds no reports.
AggregateReport aggregate_run(const std::filesystem::path& run_dir);

/// McNemar comparison of two method rows from the stored per-sample test
/// predictions, pooled across seeds. Returns {p_value, b, c, n} where b/c
/// are the discordant counts (A-only-correct / B-only-correct).
struct SignificanceResult {
    double p_value = 1.0;
    std::size_t b = 0;
    std::size_t c = 0;
    std::size_t n = 0; // pooled sample count
};
SignificanceResult significance(const std::filesystem::path& run_dir, const std::string& task,
                                const std::string& row_a, const std::string& row_b);

} // namespace guided
