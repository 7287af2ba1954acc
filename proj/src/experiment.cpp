#include "guided/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "guided/dataset.hpp"
#include "guided/errors.hpp"
#include "guided/metrics.hpp"
#include "guided/rng.hpp"

namespace guided {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointNames[] = {"stage1_I.ckpt", "stage1_S.ckpt", "stage2_G.ckpt",
                                            "stage3_Dc.ckpt", "stage3_Dsi.ckpt"};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + p.string() + ": " + e.what());
    }
    return j;
}

void write_text_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("short write to " + p.string());
}

} // namespace

json TaskConfig::to_json() const {
    json j{{"name", name}};
    if (synth) j["synth"] = synth->to_json();
    if (dataset_path) j["dataset_path"] = *dataset_path;
    if (pipeline) j["pipeline"] = pipeline->to_json();
    return j;
}

TaskConfig TaskConfig::from_json(const json& j) {
    TaskConfig t;
    try {
        t.name = j.at("name").get<std::string>();
        if (j.contains("synth")) t.synth = SynthSpec::from_json(j.at("synth"));
        if (j.contains("dataset_path")) t.dataset_path = j.at("dataset_path").get<std::string>();
        if (j.contains("pipeline")) t.pipeline = PipelineConfig::from_json(j.at("pipeline"));
    } catch (const json::exception& e) {
        throw ConfigError("bad task config: " + std::string(e.what()));
    }
    return t;
}

void ExperimentConfig::validate() const {
    if (tasks.empty()) throw ConfigError("tasks must not be empty");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    std::set<std::string> names;
    for (const TaskConfig& t : tasks) {
        if (t.name.empty()) throw ConfigError("task name must not be empty");
        if (t.name.find(',') != std::string::npos || t.name.find('/') != std::string::npos)
            throw ConfigError("task name '" + t.name + "' may not contain ',' or '/'");
        if (!names.insert(t.name).second)
            throw ConfigError("duplicate task name '" + t.name + "'");
        if (t.synth && t.dataset_path)
            throw ConfigError("task '" + t.name + "' sets both synth and dataset_path");
        if (!t.synth && !t.dataset_path && !synth && !dataset_path)
            throw ConfigError("task '" + t.name + "' has no dataset source");
        if (t.pipeline)
            t.pipeline->validate();
        if (t.synth) SynthSpec(*t.synth).validate_and_normalize();
    }
    std::set<std::uint64_t> seen;
    for (std::uint64_t s : seeds) {
        if (!seen.insert(s).second)
            throw ConfigError("duplicate seed " + std::to_string(s));
    }
    if (synth && dataset_path) throw ConfigError("set either synth or dataset_path, not both");
    if (synth) SynthSpec(*synth).validate_and_normalize();
    pipeline.validate();
    if (regenerate_per_seed && !synth) {
        bool any_synth = std::any_of(tasks.begin(), tasks.end(),
                                     [](const TaskConfig& t) { return t.synth.has_value(); });
        if (!any_synth)
            throw ConfigError("regenerate_per_seed requires a generated dataset source");
    }
}

json ExperimentConfig::to_json() const {
    json j;
    if (dataset_path) j["dataset"] = json{{"path", *dataset_path}};
    if (synth) j["dataset"] = json{{"synth", synth->to_json()}};
    j["pipeline"] = pipeline.to_json();
    j["tasks"] = json::array();
    for (const TaskConfig& t : tasks) j["tasks"].push_back(t.to_json());
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    j["resplit_per_seed"] = resplit_per_seed;
    j["regenerate_per_seed"] = regenerate_per_seed;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            if (d.contains("path")) c.dataset_path = d.at("path").get<std::string>();
            if (d.contains("synth")) c.synth = SynthSpec::from_json(d.at("synth"));
        }
        if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j.at("pipeline"));
        for (const json& t : j.value("tasks", json::array()))
            c.tasks.push_back(TaskConfig::from_json(t));
        c.seeds = j.value("seeds", c.seeds);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.resplit_per_seed = j.value("resplit_per_seed", c.resplit_per_seed);
        c.regenerate_per_seed = j.value("regenerate_per_seed", c.regenerate_per_seed);
    } catch (const json::exception& e) {
        throw ConfigError("bad experiment config: " + std::string(e.what()));
    }
    return c;
}

void RunManifest::validate(const fs::path& root) const {
    std::set<std::pair<std::string, std::uint64_t>> seen;
    for (const RunRecord& r : records) {
        if (!seen.insert({r.task, r.seed}).second)
            throw DataError("duplicate manifest record for task '" + r.task + "' seed " +
                            std::to_string(r.seed));
        for (const std::string& ck : r.checkpoints) {
            const fs::path p = root / r.dir / ck;
            if (!fs::exists(p)) throw ArtifactError("manifest references missing " + p.string());
        }
    }
}

json RunManifest::to_json() const {
    json recs = json::array();
    for (const RunRecord& r : records) {
        recs.push_back(json{{"task", r.task},
                            {"seed", r.seed},
                            {"dir", r.dir},
                            {"checkpoints", r.checkpoints},
                            {"wall_clock_sec", r.wall_clock_sec}});
    }
    return json{{"schema_version", schema_version},
                {"config", config},
                {"records", recs},
                {"total_wall_clock_sec", total_wall_clock_sec}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.config = j.at("config");
        for (const json& r : j.at("records")) {
            RunRecord rec;
            rec.task = r.at("task").get<std::string>();
            rec.seed = r.at("seed").get<std::uint64_t>();
            rec.dir = r.at("dir").get<std::string>();
            rec.checkpoints = r.at("checkpoints").get<std::vector<std::string>>();
            rec.wall_clock_sec = r.at("wall_clock_sec").get<double>();
            m.records.push_back(std::move(rec));
        }
        m.total_wall_clock_sec = j.value("total_wall_clock_sec", 0.0);
    } catch (const json::exception& e) {
        throw DataError("bad run manifest: " + std::string(e.what()));
    }
    return m;
}

namespace {

/// Fractions implied by an existing split layout, for resplitting loaded
/// datasets with the same proportions.
std::vector<double> split_fractions_of(const PairedDataset& ds) {
    const auto n = static_cast<double>(ds.size());
    return {static_cast<double>(ds.splits.train.size()) / n,
            static_cast<double>(ds.splits.val.size()) / n,
            static_cast<double>(ds.splits.test.size()) / n};
}

PairedDataset resolve_dataset(const ExperimentConfig& cfg, const TaskConfig& task,
                              std::size_t task_index, std::uint64_t run_seed) {
    const SynthSpec* spec = task.synth ? &*task.synth : (cfg.synth ? &*cfg.synth : nullptr);
    const std::string* path =
        task.dataset_path ? &*task.dataset_path : (cfg.dataset_path ? &*cfg.dataset_path : nullptr);

    PairedDataset ds;
    if (spec) {
        SynthSpec s = *spec;
        // Tasks sharing the experiment-level spec get decorrelated draws.
        if (!task.synth && cfg.tasks.size() > 1) s.seed = mix_seed(s.seed, fnv1a(task.name));
        if (cfg.regenerate_per_seed) s.seed = mix_seed(s.seed, 0x5EED0000 + run_seed);
        ds = generate(s);
        if (cfg.resplit_per_seed)
            ds.splits = make_splits(ds.size(), s.split_fractions, mix_seed(s.seed, 4000 + run_seed),
                                    s.stratify, ds.y);
    } else {
        ds = load_dataset(*path);
        if (cfg.resplit_per_seed)
            ds.splits = make_splits(ds.size(), split_fractions_of(ds),
                                    mix_seed(fnv1a(task.name), 4000 + run_seed), true, ds.y);
    }
    (void)task_index;
    if (ds.num_classes() < 2)
        throw ConfigError("task '" + task.name + "' resolves to fewer than 2 classes");
    return ds;
}

} // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const std::set<int>& stages) {
    cfg.validate();
    if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
    const fs::path root(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create output dir " + root.string() + ": " + ec.message());

    RunManifest manifest;
    manifest.config = cfg.to_json();
    const auto t_total = std::chrono::steady_clock::now();

    for (std::size_t ti = 0; ti < cfg.tasks.size(); ++ti) {
        const TaskConfig& task = cfg.tasks[ti];
        for (std::uint64_t seed : cfg.seeds) {
            const auto t0 = std::chrono::steady_clock::now();
            PairedDataset ds = resolve_dataset(cfg, task, ti, seed);

            PipelineConfig pc = task.pipeline ? *task.pipeline : cfg.pipeline;
            pc.task_name = task.name;
            pc = pc.reseeded(seed);

            const fs::path run_dir = root / task.name / ("seed_" + std::to_string(seed));
            fs::create_directories(run_dir, ec);
            if (ec)
                throw IoError("cannot create run dir " + run_dir.string() + ": " + ec.message());
            run_pipeline_stages(ds, pc, run_dir, stages);

            RunRecord rec;
            rec.task = task.name;
            rec.seed = seed;
            rec.dir = (fs::path(task.name) / ("seed_" + std::to_string(seed))).string();
            for (const char* name : kCheckpointNames) {
                if (fs::exists(run_dir / name)) rec.checkpoints.push_back(name);
            }
            rec.wall_clock_sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            manifest.records.push_back(std::move(rec));
        }
    }

    manifest.total_wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_total).count();
    manifest.validate(root);
    write_text_file(root / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

json AggregateReport::to_json() const {
    json jt = json::object();
    for (const auto& [task, rows] : tasks) {
        json jr = json::object();
        for (const auto& [row, metrics] : rows) {
            json jm = json::object();
            for (const auto& [metric, agg] : metrics) {
                jm[metric] =
                    json{{"mean", agg.mean}, {"std", agg.stddev}, {"values", agg.values}};
            }
            jr[row] = jm;
        }
        jt[task] = jr;
    }
    return json{{"tasks", jt}, {"delta_pct", delta_pct}};
}

AggregateReport AggregateReport::from_json(const json& j) {
    AggregateReport r;
    try {
        for (const auto& [task, rows] : j.at("tasks").items()) {
            for (const auto& [row, metrics] : rows.items()) {
                for (const auto& [metric, agg] : metrics.items()) {
                    AggregateMetric m;
                    m.mean = agg.at("mean").get<double>();
                    m.stddev = agg.at("std").get<double>();
                    m.values = agg.at("values").get<std::vector<double>>();
                    r.tasks[task][row][metric] = std::move(m);
                }
            }
        }
        r.delta_pct =
            j.at("delta_pct").get<std::map<std::string, std::map<std::string, double>>>();
    } catch (const json::exception& e) {
        throw DataError("bad aggregate report: " + std::string(e.what()));
    }
    return r;
}

std::string AggregateReport::to_csv() const {
    std::ostringstream out;
    out << "task,row,metric,n,mean,std,values\n";
    for (const auto& [task, rows] : tasks) {
        for (const auto& [row, metrics] : rows) {
            for (const auto& [metric, agg] : metrics) {
                out << task << ',' << row << ',' << metric << ',' << agg.values.size() << ','
                    << fmt_double(agg.mean) << ',' << fmt_double(agg.stddev) << ',';
                for (std::size_t i = 0; i < agg.values.size(); ++i) {
                    if (i) out << ';';
                    out << fmt_double(agg.values[i]);
                }
                out << '\n';
            }
        }
    }
    return out.str();
}

namespace {

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw DataError("trailing characters in number '" + s + "'");
        return v;
    } catch (const std::exception&) {
        throw DataError("bad number '" + s + "' in csv");
    }
}

/// delta_pct rebuilt from the aggregated means, the same computation
/// cmd_report uses, so csv -> report -> json reproduces the json exactly.
void recompute_delta(AggregateReport& r) {
    r.delta_pct.clear();
    for (const auto& [task, rows] : r.tasks) {
        auto base = rows.find("I");
        auto guided = rows.find("G(I)+I");
        if (base == rows.end() || guided == rows.end()) continue;
        for (const auto& [metric, agg] : guided->second) {
            auto b = base->second.find(metric);
            if (b == base->second.end()) continue;
            r.delta_pct[task][metric] = delta_percent(agg.mean, b->second.mean);
        }
    }
}

} // namespace

AggregateReport AggregateReport::from_csv(const std::string& csv) {
    AggregateReport r;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "task,row,metric,n,mean,std,values")
        throw DataError("csv header mismatch");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split_on(line, ',');
        if (f.size() != 7) throw DataError("csv row needs 7 fields, got " +
                                           std::to_string(f.size()));
        AggregateMetric m;
        m.mean = parse_double(f[4]);
        m.stddev = parse_double(f[5]);
        if (!f[6].empty()) {
            for (const std::string& v : split_on(f[6], ';')) m.values.push_back(parse_double(v));
        }
        if (m.values.size() != static_cast<std::size_t>(parse_double(f[3])))
            throw DataError("csv value count disagrees with n for " + f[0] + "/" + f[1]);
        r.tasks[f[0]][f[1]][f[2]] = std::move(m);
    }
    recompute_delta(r);
    return r;
}

std::string AggregateReport::to_table() const {
    // Columns: method | per task: BA, F1.
    std::vector<std::string> task_names;
    for (const auto& [task, rows] : tasks) task_names.push_back(task);

    auto cell = [&](const std::string& task, const std::string& row,
                    const std::string& metric) -> std::string {
        auto rt = tasks.find(task);
        if (rt == tasks.end()) return "-";
        auto rr = rt->second.find(row);
        if (rr == rt->second.end()) return "-";
        auto rm = rr->second.find(metric);
        if (rm == rr->second.end()) return "-";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f ± %.3f", rm->second.mean, rm->second.stddev);
        return buf;
    };
    auto delta_cell = [&](const std::string& task, const std::string& metric) -> std::string {
        auto dt = delta_pct.find(task);
        if (dt == delta_pct.end()) return "-";
        auto dm = dt->second.find(metric);
        if (dm == dt->second.end()) return "-";
        return render_delta_percent(dm->second);
    };

    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"method"};
    for (const std::string& t : task_names) {
        header.push_back(t + " BA");
        header.push_back(t + " F1");
    }
    grid.push_back(header);
    for (const std::string& row : method_rows()) {
        std::vector<std::string> line{row};
        for (const std::string& t : task_names) {
            line.push_back(cell(t, row, "ba"));
            line.push_back(cell(t, row, "f1"));
        }
        grid.push_back(line);
    }
    std::vector<std::string> dline{"Δ%"};
    for (const std::string& t : task_names) {
        dline.push_back(delta_cell(t, "ba"));
        dline.push_back(delta_cell(t, "f1"));
    }
    grid.push_back(dline);

    // column width in code points, so the ± glyph counts as one
    auto glyphs = [](const std::string& s) {
        std::size_t n = 0;
        for (unsigned char ch : s)
            if ((ch & 0xC0) != 0x80) ++n;
        return n;
    };
    std::vector<std::size_t> widths(grid[0].size(), 0);
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c)
            widths[c] = std::max(widths[c], glyphs(line[c]));
    }
    std::string out;
    for (const auto& line : grid) {
        std::string rendered;
        for (std::size_t c = 0; c < line.size(); ++c) {
            rendered += line[c];
            if (c + 1 < line.size())
                rendered += std::string(widths[c] - glyphs(line[c]) + 2, ' ');
        }
        while (!rendered.empty() && rendered.back() == ' ') rendered.pop_back();
        out += rendered + '\n';
    }
    return out;
}

namespace {

std::vector<std::pair<std::uint64_t, fs::path>> seed_dirs(const fs::path& task_dir) {
    std::vector<std::pair<std::uint64_t, fs::path>> dirs;
    for (const auto& e : fs::directory_iterator(task_dir)) {
        if (!e.is_directory()) continue;
        const std::string name = e.path().filename().string();
        if (name.rfind("seed_", 0) != 0) continue;
        try {
            dirs.emplace_back(std::stoull(name.substr(5)), e.path());
        } catch (const std::exception&) {
            continue;
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

} // namespace

AggregateReport aggregate_run(const fs::path& run_dir) {
    if (!fs::is_directory(run_dir)) throw IoError("run directory " + run_dir.string() +
                                                  " does not exist");
    AggregateReport agg;
    // task -> row -> metric -> per-seed values, with a per-row seed count
    std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>> vals;
    std::map<std::string, std::size_t> task_seed_count;

    for (const auto& e : fs::directory_iterator(run_dir)) {
        if (!e.is_directory()) continue;
        const auto dirs = seed_dirs(e.path());
        if (dirs.empty()) continue;
        for (const auto& [seed, dir] : dirs) {
            const fs::path report_path = dir / "report.json";
            if (!fs::exists(report_path)) continue;
            const MetricsReport rep = MetricsReport::from_json(read_json_file(report_path));
            for (const auto& [task, rows] : rep.tasks) {
                ++task_seed_count[task];
                for (const auto& [row, m] : rows) {
                    vals[task][row]["ba"].push_back(m.ba);
                    vals[task][row]["f1"].push_back(m.f1);
                    if (m.auroc) vals[task][row]["auroc"].push_back(*m.auroc);
                }
            }
        }
    }
    if (vals.empty()) throw DataError("no reports found under " + run_dir.string());

    for (auto& [task, rows] : vals) {
        for (auto& [row, metrics] : rows) {
            for (auto& [metric, values] : metrics) {
                // a metric missing in some seeds (e.g. auroc) is dropped
                if (metric == "auroc" && values.size() != task_seed_count[task]) continue;
                AggregateMetric m;
                m.values = values;
                for (double v : values) m.mean += v;
                m.mean /= static_cast<double>(values.size());
                if (values.size() > 1) {
                    double ss = 0.0;
                    for (double v : values) ss += (v - m.mean) * (v - m.mean);
                    m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
                }
                agg.tasks[task][row][metric] = std::move(m);
            }
        }
    }
    recompute_delta(agg);
    return agg;
}

SignificanceResult significance(const fs::path& run_dir, const std::string& task,
                                const std::string& row_a, const std::string& row_b) {
    const fs::path task_dir = run_dir / task;
    if (!fs::is_directory(task_dir))
        throw ArtifactError("no stored predictions for task '" + task + "' under " +
                            run_dir.string());
    std::vector<bool> correct_a, correct_b;
    for (const auto& [seed, dir] : seed_dirs(task_dir)) {
        const fs::path pred_path = dir / "predictions.json";
        if (!fs::exists(pred_path))
            throw ArtifactError("missing per-sample predictions " + pred_path.string());
        const json j = read_json_file(pred_path);
        std::vector<int> labels, pa, pb;
        try {
            labels = j.at("labels").get<std::vector<int>>();
            const json& rows = j.at("rows");
            if (!rows.contains(row_a))
                throw ArtifactError("row '" + row_a + "' has no stored predictions in " +
                                    pred_path.string());
            if (!rows.contains(row_b))
                throw ArtifactError("row '" + row_b + "' has no stored predictions in " +
                                    pred_path.string());
            pa = rows.at(row_a).get<std::vector<int>>();
            pb = rows.at(row_b).get<std::vector<int>>();
        } catch (const json::exception& e) {
            throw DataError("bad predictions file " + pred_path.string() + ": " + e.what());
        }
        if (pa.size() != labels.size() || pb.size() != labels.size())
            throw DataError("prediction length mismatch in " + pred_path.string());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            correct_a.push_back(pa[i] == labels[i]);
            correct_b.push_back(pb[i] == labels[i]);
        }
    }
    if (correct_a.empty())
        throw ArtifactError("no stored predictions for task '" + task + "' under " +
                            run_dir.string());

    SignificanceResult res;
    res.n = correct_a.size();
    for (std::size_t i = 0; i < correct_a.size(); ++i) {
        if (correct_a[i] && !correct_b[i]) ++res.b;
        if (!correct_a[i] && correct_b[i]) ++res.c;
    }
    res.p_value = mcnemar_test(correct_a, correct_b);
    return res;
}

} // namespace guided
