#include "guided/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "guided/checkpoint.hpp"
#include "guided/errors.hpp"
#include "guided/ops.hpp"
#include "guided/rng.hpp"

namespace guided {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStage1I = "stage1_I.ckpt";
constexpr const char* kStage1S = "stage1_S.ckpt";
constexpr const char* kStage2G = "stage2_G.ckpt";
constexpr const char* kStage3Dc = "stage3_Dc.ckpt";
constexpr const char* kStage3Dsi = "stage3_Dsi.ckpt";

Tensor hcat(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) throw ShapeError("concat rows disagree");
    Tensor out({a.rows(), a.cols() + b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
    }
    return out;
}

std::vector<std::size_t> widths_from_json(const json& j) {
    return j.get<std::vector<std::size_t>>();
}

/// Split tensors/labels materialized once per run.
struct SplitData {
    Tensor xI_train, xI_val, xI_test;
    Tensor xS_train, xS_val, xS_test;
    std::vector<int> y_train, y_val, y_test;
};

SplitData materialize(const PairedDataset& ds, LeakageAudit& audit) {
    const Splits& sp = ds.splits;
    if (sp.train.empty()) throw DataError("dataset has no training split");
    if (sp.val.empty()) throw DataError("dataset has no validation split");
    SplitData d;
    d.xI_train = select_rows(ds.x_I, sp.train);
    d.xI_val = select_rows(ds.x_I, sp.val);
    d.xI_test = select_rows(ds.x_I, sp.test);
    d.xS_train = select_rows(ds.x_S, sp.train);
    d.xS_val = select_rows(ds.x_S, sp.val);
    d.xS_test = select_rows(ds.x_S, sp.test);
    d.y_train = select_labels(ds.y, sp.train);
    d.y_val = select_labels(ds.y, sp.val);
    d.y_test = select_labels(ds.y, sp.test);
    // validation rows steer model selection every epoch; count them as used
    for (std::size_t i : sp.val) audit.mark(i);
    return d;
}

SampleAuditFn train_audit(LeakageAudit& audit, const std::vector<std::size_t>& train_idx) {
    return [&audit, &train_idx](std::size_t local) { audit.mark(train_idx[local]); };
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_curves(const fs::path& path, const std::vector<StageResult>& fresh) {
    std::set<std::string> rewritten;
    for (const StageResult& s : fresh) rewritten.insert(s.stage);

    std::vector<std::string> kept;
    if (fs::exists(path)) {
        std::ifstream in(path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;
            }
            if (line.empty()) continue;
            const std::string stage = line.substr(0, line.find(','));
            if (!rewritten.count(stage)) kept.push_back(line);
        }
    }

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "stage,epoch,split,loss,ba\n";
    for (const std::string& line : kept) out << line << "\n";
    for (const StageResult& s : fresh) {
        for (const CurvePoint& p : s.curve) {
            out << s.stage << ',' << p.epoch << ',' << p.split << ',' << fmt_double(p.loss)
                << ',' << (p.ba ? fmt_double(*p.ba) : std::string()) << "\n";
        }
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Classifier load_stage1(const fs::path& run_dir, const char* file, int wanted_stage) {
    const fs::path p = run_dir / file;
    if (!fs::exists(p)) {
        throw ArtifactError("stage " + std::to_string(wanted_stage) +
                            " requires the stage-1 checkpoint " + p.string() +
                            "; run stage 1 first");
    }
    return load_classifier(p.string());
}

GuidanceNet load_stage2(const fs::path& run_dir) {
    const fs::path p = run_dir / kStage2G;
    if (!fs::exists(p)) {
        throw ArtifactError("stage 3 requires the stage-2 checkpoint " + p.string() +
                            "; run stage 2 first");
    }
    return load_guidance(p.string());
}

} // namespace

void LeakageAudit::mark(std::size_t row) {
    if (row < touched.size()) touched[row] = true;
}

std::size_t LeakageAudit::touched_count() const {
    std::size_t n = 0;
    for (bool b : touched) n += b ? 1 : 0;
    return n;
}

bool LeakageAudit::clean(const Splits& splits) const {
    for (std::size_t i : splits.test) {
        if (i < touched.size() && touched[i]) return false;
    }
    return true;
}

PipelineConfig::PipelineConfig() {
    stage1_inferior.batch_size = 32;
    stage1_inferior.max_epochs = 120;
    stage1_inferior.patience = 30;
    stage1_inferior.optimizer = OptimKind::Adam;
    stage1_inferior.lr = 3e-3;
    stage1_inferior.weighted_sampling = true;
    stage1_superior = stage1_inferior;

    stage2_guidance.batch_size = 32;
    stage2_guidance.max_epochs = 800;
    stage2_guidance.patience = 150;
    stage2_guidance.optimizer = OptimKind::Adam;
    stage2_guidance.lr = 2e-3;
    stage2_guidance.weighted_sampling = false;

    stage3_combined.batch_size = 64;
    stage3_combined.max_epochs = 300;
    stage3_combined.patience = 80;
    stage3_combined.optimizer = OptimKind::Adam;
    stage3_combined.lr = 3e-3;
    stage3_combined.weighted_sampling = true;
}

void PipelineConfig::validate() const {
    if (task_name.empty()) throw ConfigError("task_name must not be empty");
    if (latent_I == 0 || latent_S == 0) throw ConfigError("latent widths must be positive");
    if (bottleneck == 0) throw ConfigError("bottleneck must be positive");
    for (std::size_t w : encoder_hidden) {
        if (w == 0) throw ConfigError("encoder_hidden widths must be positive");
    }
    for (std::size_t w : decoder_hidden) {
        if (w == 0) throw ConfigError("decoder_hidden widths must be positive");
    }
    stage1_inferior.validate();
    stage1_superior.validate();
    stage2_guidance.validate();
    stage3_combined.validate();
}

PipelineConfig PipelineConfig::reseeded(std::uint64_t run_seed) const {
    PipelineConfig c = *this;
    c.seed = run_seed;
    c.stage1_inferior.seed = mix_seed(run_seed, 21);
    c.stage1_superior.seed = mix_seed(run_seed, 22);
    c.stage2_guidance.seed = mix_seed(run_seed, 23);
    c.stage3_combined.seed = mix_seed(run_seed, 24);
    return c;
}

json PipelineConfig::to_json() const {
    json j;
    j["task_name"] = task_name;
    j["seed"] = seed;
    j["latent_I"] = latent_I;
    j["latent_S"] = latent_S;
    j["encoder_hidden"] = encoder_hidden;
    j["decoder_hidden"] = decoder_hidden;
    j["bottleneck"] = bottleneck;
    j["stage1_inferior"] = stage1_inferior.to_json();
    j["stage1_superior"] = stage1_superior.to_json();
    j["stage2_guidance"] = stage2_guidance.to_json();
    j["stage3_combined"] = stage3_combined.to_json();
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.task_name = j.value("task_name", c.task_name);
    c.seed = j.value("seed", c.seed);
    c.latent_I = j.value("latent_I", c.latent_I);
    c.latent_S = j.value("latent_S", c.latent_S);
    if (j.contains("encoder_hidden")) c.encoder_hidden = widths_from_json(j.at("encoder_hidden"));
    if (j.contains("decoder_hidden")) c.decoder_hidden = widths_from_json(j.at("decoder_hidden"));
    c.bottleneck = j.value("bottleneck", c.bottleneck);
    if (j.contains("stage1_inferior")) {
        c.stage1_inferior = TrainConfig::from_json(j.at("stage1_inferior"));
    }
    if (j.contains("stage1_superior")) {
        c.stage1_superior = TrainConfig::from_json(j.at("stage1_superior"));
    }
    if (j.contains("stage2_guidance")) {
        c.stage2_guidance = TrainConfig::from_json(j.at("stage2_guidance"));
    }
    if (j.contains("stage3_combined")) {
        c.stage3_combined = TrainConfig::from_json(j.at("stage3_combined"));
    }
    return c;
}

const std::vector<std::string>& method_rows() {
    static const std::vector<std::string> rows = {"S+I", "S", "I", "G(I)", "G(I)+I"};
    return rows;
}

MetricsReport evaluate_all(ModelBundle& bundle, Mlp& fusion_decoder, const PairedDataset& ds,
                           const std::string& task_name,
                           std::map<std::string, std::vector<int>>* predictions_out,
                           std::vector<int>* labels_out) {
    if (ds.splits.test.empty()) throw DataError("dataset has no test split");
    const std::size_t k = ds.num_classes();
    const Tensor xI = select_rows(ds.x_I, ds.splits.test);
    const Tensor xS = select_rows(ds.x_S, ds.splits.test);
    const std::vector<int> y = select_labels(ds.y, ds.splits.test);

    const Tensor zI = bundle.inferior.encode_values(xI);
    const Tensor zS = bundle.superior.encode_values(xS);

    std::map<std::string, Tensor> logits;
    logits.emplace("S+I", fusion_decoder.forward_values(hcat(zS, zI)));
    logits.emplace("S", bundle.superior.classify_values(xS));
    logits.emplace("I", bundle.inferior.classify_values(xI));
    logits.emplace("G(I)", guidance_diag_forward_values(bundle, xI));
    logits.emplace("G(I)+I", guided_forward_values(bundle, xI));

    MetricsReport report;
    std::map<std::string, std::vector<int>> preds;
    for (const std::string& row : method_rows()) {
        PredictionSet p;
        p.y_true = y;
        p.y_pred = argmax_rows(logits.at(row));
        p.num_classes = k;
        MethodMetrics m;
        m.ba = balanced_accuracy(p);
        m.f1 = micro_f1(p);
        if (k == 2) {
            const Tensor prob = softmax_values(logits.at(row));
            std::vector<double> score(prob.rows());
            for (std::size_t i = 0; i < prob.rows(); ++i) score[i] = prob.at(i, 1);
            m.auroc = auroc(y, score);
        }
        report.tasks[task_name][row] = m;
        preds[row] = std::move(p.y_pred);
    }

    const MethodMetrics& guided = report.tasks.at(task_name).at("G(I)+I");
    const MethodMetrics& inferior = report.tasks.at(task_name).at("I");
    if (inferior.ba > 0.0) {
        report.delta_pct[task_name]["ba"] = delta_percent(guided.ba, inferior.ba);
    }
    if (inferior.f1 > 0.0) {
        report.delta_pct[task_name]["f1"] = delta_percent(guided.f1, inferior.f1);
    }
    if (guided.auroc && inferior.auroc && *inferior.auroc > 0.0) {
        report.delta_pct[task_name]["auroc"] = delta_percent(*guided.auroc, *inferior.auroc);
    }

    std::vector<bool> correct_guided(y.size()), correct_inferior(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        correct_guided[i] = preds.at("G(I)+I")[i] == y[i];
        correct_inferior[i] = preds.at("I")[i] == y[i];
    }
    report.mcnemar[task_name] = mcnemar_test(correct_guided, correct_inferior);

    if (predictions_out) *predictions_out = std::move(preds);
    if (labels_out) *labels_out = y;
    return report;
}

namespace {

/// Shared stage driver; when run_dir is null nothing touches the disk.
PipelineResult run_impl(const PairedDataset& ds, const PipelineConfig& cfg,
                        const fs::path* run_dir, const std::set<int>& stages) {
    cfg.validate();
    ds.validate();
    if (ds.num_classes() < 2) {
        throw DataError("pipeline needs at least 2 classes, got " +
                        std::to_string(ds.num_classes()));
    }
    if (stages.empty()) throw ConfigError("no stages requested");
    for (int s : stages) {
        if (s < 1 || s > 3) throw ConfigError("unknown stage " + std::to_string(s));
    }
    if (run_dir) fs::create_directories(*run_dir);

    PipelineResult result;
    result.audit.touched.assign(ds.size(), false);
    const SplitData data = materialize(ds, result.audit);
    const std::size_t k = ds.num_classes();

    BundleSpec spec;
    spec.d_I = ds.x_I.cols();
    spec.d_S = ds.x_S.cols();
    spec.num_classes = k;
    spec.latent_I = cfg.latent_I;
    spec.latent_S = cfg.latent_S;
    spec.encoder_hidden = cfg.encoder_hidden;
    spec.decoder_hidden = cfg.decoder_hidden;
    spec.bottleneck = cfg.bottleneck;
    ModelBundle bundle = make_bundle(spec, mix_seed(cfg.seed, 10));

    const json meta = {{"task", cfg.task_name}, {"seed", cfg.seed}};
    std::vector<StageResult> fresh;

    // stage (i): independent classifiers per modality
    if (stages.count(1)) {
        bundle.freeze_all_except({"E_I", "D_I"});
        fresh.push_back(fit_classifier(
            "stage1_I", [&](Graph& g, Var x) { return bundle.inferior.classify(g, x); },
            [&](const Tensor& x) { return bundle.inferior.classify_values(x); },
            bundle.params_of({"E_I", "D_I"}), data.xI_train, data.y_train, data.xI_val,
            data.y_val, k, cfg.stage1_inferior, train_audit(result.audit, ds.splits.train)));

        bundle.freeze_all_except({"E_S", "D_S"});
        fresh.push_back(fit_classifier(
            "stage1_S", [&](Graph& g, Var x) { return bundle.superior.classify(g, x); },
            [&](const Tensor& x) { return bundle.superior.classify_values(x); },
            bundle.params_of({"E_S", "D_S"}), data.xS_train, data.y_train, data.xS_val,
            data.y_val, k, cfg.stage1_superior, train_audit(result.audit, ds.splits.train)));

        if (run_dir) {
            save_classifier((*run_dir / kStage1I).string(), bundle.inferior, meta);
            save_classifier((*run_dir / kStage1S).string(), bundle.superior, meta);
        }
    } else if (stages.count(2) || stages.count(3)) {
        if (!run_dir) throw ConfigError("stage subset needs a run directory");
        const int wanted = stages.count(2) ? 2 : 3;
        bundle.inferior = load_stage1(*run_dir, kStage1I, wanted);
        bundle.superior = load_stage1(*run_dir, kStage1S, wanted);
    }

    // stage (ii): latent guidance, encoders frozen
    if (stages.count(2)) {
        const Tensor zI_train = bundle.inferior.encode_values(data.xI_train);
        const Tensor zI_val = bundle.inferior.encode_values(data.xI_val);
        const Tensor zS_train = bundle.superior.encode_values(data.xS_train);
        const Tensor zS_val = bundle.superior.encode_values(data.xS_val);
        if (bundle.guidance.in_width() != zI_train.cols() ||
            bundle.guidance.out_width() != zS_train.cols()) {
            throw ConfigError("guidance widths do not match the encoder latents");
        }
        bundle.freeze_all_except({"G"});
        fresh.push_back(fit_regressor(
            "stage2_G", [&](Graph& g, Var z) { return bundle.guidance.guide(g, z); },
            [&](const Tensor& z) { return bundle.guidance.guide_values(z); },
            bundle.params_of({"G"}), zI_train, zS_train, zI_val, zS_val, cfg.stage2_guidance,
            train_audit(result.audit, ds.splits.train)));
        if (run_dir) save_guidance((*run_dir / kStage2G).string(), bundle.guidance, meta);
    } else if (stages.count(3)) {
        if (!run_dir) throw ConfigError("stage subset needs a run directory");
        bundle.guidance = load_stage2(*run_dir);
    }

    // stage (iii): combined decoder on [ẑ_S ⌢ z_I], plus the S+I fusion
    // baseline trained under the same protocol
    Mlp fusion(MlpSpec{std::vector<std::size_t>{cfg.latent_S + cfg.latent_I, k}});
    if (stages.count(3)) {
        const Tensor zI_train = bundle.inferior.encode_values(data.xI_train);
        const Tensor zI_val = bundle.inferior.encode_values(data.xI_val);
        const Tensor feat_train = hcat(bundle.guidance.guide_values(zI_train), zI_train);
        const Tensor feat_val = hcat(bundle.guidance.guide_values(zI_val), zI_val);

        bundle.freeze_all_except({"D_c"});
        fresh.push_back(fit_classifier(
            "stage3_Dc", [&](Graph& g, Var f) { return bundle.combined_decoder.forward(g, f); },
            [&](const Tensor& f) { return bundle.combined_decoder.forward_values(f); },
            bundle.combined_decoder.params(), feat_train, data.y_train, feat_val, data.y_val,
            k, cfg.stage3_combined, train_audit(result.audit, ds.splits.train)));

        const Tensor zS_train = bundle.superior.encode_values(data.xS_train);
        const Tensor zS_val = bundle.superior.encode_values(data.xS_val);
        const Tensor fus_train = hcat(zS_train, zI_train);
        const Tensor fus_val = hcat(zS_val, zI_val);
        Rng fusion_rng(mix_seed(cfg.seed, 11));
        fusion = Mlp(MlpSpec{std::vector<std::size_t>{fus_train.cols(), k}}, fusion_rng);
        fresh.push_back(fit_classifier(
            "stage3_Dsi", [&](Graph& g, Var f) { return fusion.forward(g, f); },
            [&](const Tensor& f) { return fusion.forward_values(f); }, fusion.params(),
            fus_train, data.y_train, fus_val, data.y_val, k, cfg.stage3_combined,
            train_audit(result.audit, ds.splits.train)));

        if (run_dir) {
            save_mlp((*run_dir / kStage3Dc).string(), bundle.combined_decoder, meta);
            save_mlp((*run_dir / kStage3Dsi).string(), fusion, meta);
        }

        result.report = evaluate_all(bundle, fusion, ds, cfg.task_name,
                                     &result.test_predictions, &result.test_labels);
        if (run_dir) {
            write_json_file(*run_dir / "report.json", result.report.to_json());
            json pj;
            pj["labels"] = result.test_labels;
            pj["rows"] = result.test_predictions;
            write_json_file(*run_dir / "predictions.json", pj);
        }
    }

    if (run_dir && !fresh.empty()) write_curves(*run_dir / "curves.csv", fresh);

    if (!result.audit.clean(ds.splits)) {
        throw DataError("test rows leaked into training");
    }
    result.bundle = std::move(bundle);
    result.fusion_decoder = std::move(fusion);
    result.stages = std::move(fresh);
    return result;
}

} // namespace

PipelineResult run_pipeline(const PairedDataset& ds, const PipelineConfig& cfg) {
    return run_impl(ds, cfg, nullptr, {1, 2, 3});
}

PipelineResult run_pipeline_stages(const PairedDataset& ds, const PipelineConfig& cfg,
                                   const fs::path& run_dir, const std::set<int>& stages) {
    return run_impl(ds, cfg, &run_dir, stages);
}

PipelineResult run_pipeline(const PairedDataset& ds, const PipelineConfig& cfg,
                            const fs::path& run_dir) {
    return run_impl(ds, cfg, &run_dir, {1, 2, 3});
}

} // namespace guided
