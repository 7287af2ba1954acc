// guided-distill: synth | train | report | significance
//
// Exit codes: 0 ok, 2 config error, 3 IO/data error, 4 missing artifact,
// 5 diverged training (non-finite loss). Stdout carries only the requested
// payload; diagnostics go to stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guided/dataset.hpp"
#include "guided/errors.hpp"
#include "guided/experiment.hpp"
#include "guided/presets.hpp"
#include "guided/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kOutputRootEnv = "GUIDED_DISTILL_OUT";

std::string default_output_root() {
    const char* env = std::getenv(kOutputRootEnv);
    return env && *env ? env : "runs";
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw guided::IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw guided::IoError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

std::set<int> parse_stages(const std::string& s) {
    std::set<int> stages;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            stages.insert(v);
        } catch (const std::exception&) {
            throw guided::ConfigError("bad stage '" + item + "' in --stages");
        }
    }
    if (stages.empty()) throw guided::ConfigError("--stages must name at least one stage");
    return stages;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const std::uint64_t v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            seeds.push_back(v);
        } catch (const std::exception&) {
            throw guided::ConfigError("bad seed '" + item + "' in --seeds");
        }
    }
    if (seeds.empty()) throw guided::ConfigError("--seeds must name at least one seed");
    return seeds;
}

int cmd_synth(const std::string& spec_file, const std::string& preset, const std::string& out) {
    guided::SynthSpec spec;
    if (!spec_file.empty()) {
        spec = guided::SynthSpec::from_json(read_json_file(spec_file));
    } else if (!preset.empty()) {
        const guided::ExperimentConfig cfg = guided::make_preset(preset);
        if (!cfg.synth) {
            if (cfg.tasks.empty() || !cfg.tasks.front().synth)
                throw guided::ConfigError("preset '" + preset + "' has no generator spec");
            spec = *cfg.tasks.front().synth;
        } else {
            spec = *cfg.synth;
        }
    }
    // else: library defaults

    guided::PairedDataset ds = guided::generate(spec);
    guided::SynthSpec echo = spec;
    echo.validate_and_normalize();
    guided::save_dataset(ds, out, echo.to_json().dump());

    std::printf("N=%zu K=%zu d_I=%zu d_S=%zu splits=%zu/%zu/%zu\n", ds.size(), ds.num_classes(),
                ds.x_I.shape()[1], ds.x_S.shape()[1], ds.splits.train.size(),
                ds.splits.val.size(), ds.splits.test.size());
    return 0;
}

int cmd_train(const std::string& config_file, const std::string& preset, const std::string& out,
              const std::string& seeds, const std::string& stages_arg) {
    guided::ExperimentConfig cfg;
    std::string run_name = "experiment";
    if (!config_file.empty()) {
        cfg = guided::ExperimentConfig::from_json(read_json_file(config_file));
        run_name = fs::path(config_file).stem().string();
    } else if (!preset.empty()) {
        cfg = guided::make_preset(preset);
        run_name = preset;
    } else {
        throw guided::ConfigError("train needs --config or --preset");
    }

    if (!seeds.empty()) cfg.seeds = parse_seeds(seeds);
    if (!out.empty()) cfg.output_dir = out;
    if (cfg.output_dir.empty())
        cfg.output_dir = (fs::path(default_output_root()) / run_name).string();

    const std::set<int> stages = stages_arg.empty() ? std::set<int>{1, 2, 3}
                                                    : parse_stages(stages_arg);
    const guided::RunManifest manifest = guided::run_experiment(cfg, stages);
    for (const guided::RunRecord& r : manifest.records) {
        std::fprintf(stderr, "[guided-distill] %s seed %llu done in %.1fs\n", r.task.c_str(),
                     static_cast<unsigned long long>(r.seed), r.wall_clock_sec);
    }
    std::printf("%s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_report(const std::string& run, const std::string& format) {
    const guided::AggregateReport agg = guided::aggregate_run(run);
    if (format == "table") {
        std::fputs(agg.to_table().c_str(), stdout);
    } else if (format == "json") {
        std::fputs((agg.to_json().dump(2) + "\n").c_str(), stdout);
    } else if (format == "csv") {
        std::fputs(agg.to_csv().c_str(), stdout);
    } else {
        throw guided::ConfigError("unknown --format '" + format + "' (table|json|csv)");
    }
    return 0;
}

int cmd_significance(const std::string& run, const std::string& task, const std::string& row_a,
                     const std::string& row_b) {
    const guided::SignificanceResult res = guided::significance(run, task, row_a, row_b);
    const json payload{{"task", task},       {"row_a", row_a}, {"row_b", row_b},
                       {"p_value", res.p_value}, {"b", res.b},     {"c", res.c},
                       {"n", res.n}};
    std::printf("%s\n", payload.dump().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided cross-modal distillation experiments"};
    app.require_subcommand(1);

    std::string synth_spec, synth_preset, synth_out;
    CLI::App* synth = app.add_subcommand("synth", "Generate a paired dataset on disk");
    synth->add_option("--spec", synth_spec, "Generator spec JSON file");
    synth->add_option("--preset", synth_preset, "Use a named preset's generator spec");
    synth->add_option("--out", synth_out, "Output dataset directory")->required();

    std::string train_config, train_preset, train_out, train_seeds, train_stages;
    CLI::App* train = app.add_subcommand("train", "Run the distillation pipeline");
    train->add_option("--config", train_config, "Experiment config JSON file");
    train->add_option("--preset", train_preset, "Named preset: radpath-like|derm7pt-like|benchmark");
    train->add_option("--out", train_out, "Run directory (default: $GUIDED_DISTILL_OUT/<name>)");
    train->add_option("--seeds", train_seeds, "Comma-separated seed overrides");
    train->add_option("--stages", train_stages, "Comma-separated stage subset, e.g. 1,2");

    std::string report_run, report_format = "table";
    CLI::App* report = app.add_subcommand("report", "Aggregate and render run results");
    report->add_option("--run", report_run, "Run directory")->required();
    report->add_option("--format", report_format, "table|json|csv");

    std::string sig_run, sig_task, sig_row_a, sig_row_b;
    CLI::App* sig = app.add_subcommand("significance", "McNemar test between two method rows");
    sig->add_option("--run", sig_run, "Run directory")->required();
    sig->add_option("--task", sig_task, "Task name")->required();
    sig->add_option("--row-a", sig_row_a, "First method row")->required();
    sig->add_option("--row-b", sig_row_b, "Second method row")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_spec, synth_preset, synth_out);
        if (train->parsed())
            return cmd_train(train_config, train_preset, train_out, train_seeds, train_stages);
        if (report->parsed()) return cmd_report(report_run, report_format);
        if (sig->parsed()) return cmd_significance(sig_run, sig_task, sig_row_a, sig_row_b);
    } catch (const guided::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const guided::ArtifactError& e) {
        std::fprintf(stderr, "missing artifact: %s\n", e.what());
        return 4;
    } catch (const guided::TrainingError& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return 5;
    } catch (const guided::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const guided::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const guided::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
