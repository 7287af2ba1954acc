#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "guided/checkpoint.hpp"
#include "guided/errors.hpp"
#include "guided/pipeline.hpp"
#include "guided/sampler.hpp"
#include "guided/synth.hpp"
#include "guided/train.hpp"

using namespace guided;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("guided_pipe_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

PairedDataset bench_ds(std::uint64_t seed, std::size_t n = 600) {
    SynthSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.split_fractions = {0.6, 0.2, 0.2};
    return generate(spec);
}

TrainConfig quick_cfg(std::size_t epochs, std::size_t patience, double lr,
                      std::uint64_t seed) {
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.max_epochs = epochs;
    cfg.patience = patience;
    cfg.optimizer = OptimKind::Adam;
    cfg.lr = lr;
    cfg.seed = seed;
    return cfg;
}

PipelineConfig bench_cfg(std::uint64_t seed) {
    PipelineConfig cfg; // stage protocols: calibrated benchmark defaults
    cfg.stage3_combined.class_weights = std::vector<double>{1.0, 1.7, 1.6};
    return cfg.reseeded(seed);
}

/// Caps every stage at `epochs` with early stopping off (fast-path tests).
void shrink_stages(PipelineConfig& cfg, std::size_t epochs) {
    for (TrainConfig* s : {&cfg.stage1_inferior, &cfg.stage1_superior, &cfg.stage2_guidance,
                           &cfg.stage3_combined}) {
        s->max_epochs = epochs;
        s->patience = 0;
    }
}

/// Two-class blob pair around +/-mu, trivially separable at small noise.
void blob_data(std::size_t n, double noise, std::uint64_t seed, Tensor& x,
               std::vector<int>& y) {
    Rng rng(seed);
    x = Tensor({n, 2});
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double mu = label == 0 ? -1.0 : 1.0;
        x.at(i, 0) = mu + noise * rng.normal();
        x.at(i, 1) = -mu + noise * rng.normal();
        y[i] = label;
    }
}

struct MlpTask {
    Mlp net;
    ForwardFn forward;
    ForwardValuesFn values;

    explicit MlpTask(MlpSpec spec, std::uint64_t seed) {
        Rng rng(seed);
        net = Mlp(spec, rng);
        forward = [this](Graph& g, Var v) { return net.forward(g, v); };
        values = [this](const Tensor& t) { return net.forward_values(t); };
    }
};

} // namespace

TEST_CASE("weighted sampler: balanced labels sample uniformly") {
    WeightedSampler s({0, 1, 2, 0, 1, 2}, 3, 9);
    for (double p : s.probabilities()) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("weighted sampler: the lone minority sample draws half the stream") {
    WeightedSampler s({0, 0, 0, 1}, 2, 5);
    CHECK(s.probabilities()[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(s.probabilities()[3] == doctest::Approx(0.5).epsilon(1e-12));

    const std::size_t draws = 100000;
    std::size_t minority = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        if (s.next() == 3) ++minority;
    }
    const double freq = static_cast<double>(minority) / static_cast<double>(draws);
    CHECK(freq > 0.49);
    CHECK(freq < 0.51);
}

TEST_CASE("weighted sampler: identical seeds give identical streams") {
    const std::vector<int> labels = {0, 0, 1, 2, 2, 2, 1};
    WeightedSampler a(labels, 3, 77);
    WeightedSampler b(labels, 3, 77);
    WeightedSampler c(labels, 3, 78);
    const auto sa = a.draw(200);
    const auto sb = b.draw(200);
    const auto sc = c.draw(200);
    CHECK(sa == sb);
    CHECK(sa != sc);
}

TEST_CASE("weighted sampler: a class with no samples is rejected") {
    CHECK_THROWS_AS(WeightedSampler({0, 0, 1}, 3, 1), DataError);
    CHECK_THROWS_AS(WeightedSampler({}, 2, 1), DataError);
    CHECK_THROWS_AS(WeightedSampler({0, 3}, 3, 1), LabelError);
}

TEST_CASE("train config validates its invariants") {
    TrainConfig cfg = quick_cfg(10, 5, 1e-3, 1);
    CHECK_NOTHROW(cfg.validate());

    TrainConfig bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.max_epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.patience = 11;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.class_weights = std::vector<double>{1.0, -1.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.class_weights = std::vector<double>{1.0, 1.7};
    CHECK_NOTHROW(bad.validate_for_classes(2));
    CHECK_THROWS_AS(bad.validate_for_classes(3), ConfigError);
}

TEST_CASE("train config round-trips through json") {
    TrainConfig cfg;
    cfg.batch_size = 50;
    cfg.max_epochs = 500;
    cfg.patience = 200;
    cfg.optimizer = OptimKind::Sgd;
    cfg.lr = 1e-3;
    cfg.class_weights = std::vector<double>{1.0, 1.7, 1.6};
    cfg.weighted_sampling = true;
    cfg.seed = 42;

    const TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.batch_size == 50);
    CHECK(back.max_epochs == 500);
    CHECK(back.patience == 200);
    CHECK(back.optimizer == OptimKind::Sgd);
    CHECK(back.lr == 1e-3);
    REQUIRE(back.class_weights.has_value());
    CHECK(*back.class_weights == std::vector<double>{1.0, 1.7, 1.6});
    CHECK(back.weighted_sampling);
    CHECK(back.seed == 42);

    // absent weights stay absent
    TrainConfig plain = quick_cfg(10, 0, 1e-2, 3);
    CHECK_FALSE(TrainConfig::from_json(plain.to_json()).class_weights.has_value());
}

TEST_CASE("uniform class weights reproduce the unweighted trajectory") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    blob_data(64, 0.6, 11, x_train, y_train);
    blob_data(32, 0.6, 12, x_val, y_val);

    TrainConfig cfg = quick_cfg(12, 0, 1e-2, 9);
    cfg.batch_size = 16;
    TrainConfig weighted = cfg;
    weighted.class_weights = std::vector<double>{1.0, 1.0};

    MlpTask a(MlpSpec{2, 8, 2}, 31);
    MlpTask b(MlpSpec{2, 8, 2}, 31);
    const StageResult ra = fit_classifier("plain", a.forward, a.values, a.net.params(),
                                          x_train, y_train, x_val, y_val, 2, cfg);
    const StageResult rb = fit_classifier("uniform", b.forward, b.values, b.net.params(),
                                          x_train, y_train, x_val, y_val, 2, weighted);

    REQUIRE(ra.curve.size() == rb.curve.size());
    for (std::size_t i = 0; i < ra.curve.size(); ++i) {
        CHECK(ra.curve[i].loss == rb.curve[i].loss);
        CHECK(ra.curve[i].ba == rb.curve[i].ba);
    }
    const auto pa = a.net.params();
    const auto pb = b.net.params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}

TEST_CASE("early stopping halts after patience and returns the best checkpoint") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    blob_data(64, 0.15, 21, x_train, y_train);
    blob_data(32, 0.15, 22, x_val, y_val);

    TrainConfig cfg = quick_cfg(200, 3, 1e-2, 4);
    cfg.batch_size = 16;

    MlpTask task(MlpSpec{2, 8, 2}, 55);
    const StageResult res = fit_classifier("stop", task.forward, task.values,
                                           task.net.params(), x_train, y_train, x_val, y_val,
                                           2, cfg);

    CHECK(res.epochs_run < cfg.max_epochs);
    CHECK(res.epochs_run == res.best_epoch + cfg.patience);
    CHECK(res.curve.size() == 2 * res.epochs_run);
    CHECK(res.curve.size() <= 2 * cfg.max_epochs);

    // the val curve at best_epoch carries exactly the best metric
    const CurvePoint& at_best = res.curve[2 * (res.best_epoch - 1) + 1];
    CHECK(at_best.split == "val");
    REQUIRE(at_best.ba.has_value());
    CHECK(*at_best.ba == res.best_val_metric);

    // returned parameters reproduce the best validation metric
    PredictionSet p;
    p.y_true = y_val;
    p.y_pred = argmax_rows(task.net.forward_values(x_val));
    p.num_classes = 2;
    CHECK(balanced_accuracy(p) == res.best_val_metric);
}

TEST_CASE("divergent training raises a training error naming the stage") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    blob_data(64, 0.3, 41, x_train, y_train);
    blob_data(16, 0.3, 42, x_val, y_val);

    TrainConfig cfg = quick_cfg(50, 0, 1e30, 4);
    cfg.batch_size = 8;
    cfg.optimizer = OptimKind::Sgd;

    MlpTask task(MlpSpec{2, 8, 2}, 7);
    try {
        fit_classifier("boom_stage", task.forward, task.values, task.net.params(), x_train,
                       y_train, x_val, y_val, 2, cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("boom_stage") != std::string::npos);
        CHECK(msg.find("non-finite") != std::string::npos);
    }
}

TEST_CASE("empty splits are rejected") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    blob_data(16, 0.3, 51, x_train, y_train);
    blob_data(8, 0.3, 52, x_val, y_val);
    const Tensor empty({0, 2});
    const std::vector<int> no_labels;

    MlpTask task(MlpSpec{2, 4, 2}, 3);
    TrainConfig cfg = quick_cfg(5, 0, 1e-2, 1);
    CHECK_THROWS_AS(fit_classifier("s", task.forward, task.values, task.net.params(), empty,
                                   no_labels, x_val, y_val, 2, cfg),
                    DataError);
    CHECK_THROWS_AS(fit_classifier("s", task.forward, task.values, task.net.params(), x_train,
                                   y_train, empty, no_labels, 2, cfg),
                    DataError);
}

TEST_CASE("guidance net drives a realizable latent map to near-zero held-out error") {
    // the target map is produced by a frozen net of the same shape, so the
    // student can represent it exactly and val MSE should approach zero
    Rng rng(606);
    Tensor z_train({96, 8});
    Tensor z_val({32, 8});
    for (double& v : z_train.data()) v = rng.normal();
    for (double& v : z_val.data()) v = rng.normal();

    Rng teacher_init(608);
    GuidanceNet teacher(8, 3, 8, teacher_init); // narrower than the student
    const Tensor t_train = teacher.guide_values(z_train);
    const Tensor t_val = teacher.guide_values(z_val);

    Rng init(607);
    GuidanceNet g(8, 6, 8, init);

    TrainConfig cfg = quick_cfg(3000, 0, 1e-2, 8);
    cfg.batch_size = 96; // full batch: exact gradients all the way down
    const StageResult res = fit_regressor(
        "stage2_G", [&](Graph& gr, Var z) { return g.guide(gr, z); },
        [&](const Tensor& z) { return g.guide_values(z); }, g.net().params(), z_train,
        t_train, z_val, t_val, cfg);

    CHECK_FALSE(res.higher_is_better);
    CHECK(res.best_val_metric < 1e-3);
    CHECK(mse_value(g.guide_values(z_val), t_val) == res.best_val_metric);
}

TEST_CASE("trained guidance beats its untrained initialization on held-out pairs") {
    const PairedDataset ds = bench_ds(3, 300);
    BundleSpec spec;
    spec.d_I = 32;
    spec.d_S = 32;
    spec.num_classes = 3;
    spec.latent_I = 16;
    spec.latent_S = 16;
    spec.encoder_hidden = {32};
    spec.decoder_hidden = {};
    spec.bottleneck = 8;
    ModelBundle bundle = make_bundle(spec, 99);

    const Tensor zI_train = bundle.inferior.encode_values(select_rows(ds.x_I, ds.splits.train));
    const Tensor zS_train = bundle.superior.encode_values(select_rows(ds.x_S, ds.splits.train));
    const Tensor zI_val = bundle.inferior.encode_values(select_rows(ds.x_I, ds.splits.val));
    const Tensor zS_val = bundle.superior.encode_values(select_rows(ds.x_S, ds.splits.val));

    const double untrained = mse_value(bundle.guidance.guide_values(zI_val), zS_val);

    TrainConfig cfg = quick_cfg(60, 0, 3e-3, 5);
    const StageResult res = fit_regressor(
        "stage2_G", [&](Graph& g, Var z) { return bundle.guidance.guide(g, z); },
        [&](const Tensor& z) { return bundle.guidance.guide_values(z); },
        bundle.params_of({"G"}), zI_train, zS_train, zI_val, zS_val, cfg);

    CHECK(res.best_val_metric < untrained);
}

TEST_CASE("guidance fitting leaves the frozen encoders bit-identical") {
    const PairedDataset ds = bench_ds(4, 240);
    BundleSpec spec;
    spec.d_I = 32;
    spec.d_S = 32;
    spec.num_classes = 3;
    spec.latent_I = 12;
    spec.latent_S = 12;
    spec.encoder_hidden = {16};
    spec.decoder_hidden = {};
    spec.bottleneck = 6;
    ModelBundle bundle = make_bundle(spec, 17);
    bundle.freeze_all_except({"G"});

    std::vector<Tensor> before;
    for (Parameter* p : bundle.params_of({"E_I", "E_S", "D_I", "D_S", "D_c"})) {
        before.push_back(p->value);
    }

    const Tensor zI_train = bundle.inferior.encode_values(select_rows(ds.x_I, ds.splits.train));
    const Tensor zS_train = bundle.superior.encode_values(select_rows(ds.x_S, ds.splits.train));
    const Tensor zI_val = bundle.inferior.encode_values(select_rows(ds.x_I, ds.splits.val));
    const Tensor zS_val = bundle.superior.encode_values(select_rows(ds.x_S, ds.splits.val));

    TrainConfig cfg = quick_cfg(15, 0, 1e-2, 2);
    fit_regressor("stage2_G", [&](Graph& g, Var z) { return bundle.guidance.guide(g, z); },
                  [&](const Tensor& z) { return bundle.guidance.guide_values(z); },
                  bundle.params_of({"G"}), zI_train, zS_train, zI_val, zS_val, cfg);

    const auto after = bundle.params_of({"E_I", "E_S", "D_I", "D_S", "D_c"});
    for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i]->value == before[i]);
}

TEST_CASE("full pipeline keeps stage-1 and stage-2 weights fixed downstream") {
    const PairedDataset ds = bench_ds(6, 400);
    const PipelineConfig cfg = bench_cfg(6);

    // a stage-1-only run pins what stage (i) produced...
    const fs::path dir = temp_dir("isolation");
    PipelineResult stage1 = run_pipeline_stages(ds, cfg, dir, {1});
    // ...then stages 2-3 on top must leave those weights untouched
    PipelineResult full = run_pipeline(ds, cfg);

    const auto p1 = stage1.bundle.params_of({"E_I", "D_I", "E_S", "D_S"});
    const auto pf = full.bundle.params_of({"E_I", "D_I", "E_S", "D_S"});
    REQUIRE(p1.size() == pf.size());
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->value == pf[i]->value);

    // and the guidance weights equal a stages-{1,2} run's output
    PipelineResult stage12 = run_pipeline_stages(ds, cfg, temp_dir("isolation2"), {1, 2});
    const auto g12 = stage12.bundle.params_of({"G"});
    const auto gf = full.bundle.params_of({"G"});
    for (std::size_t i = 0; i < g12.size(); ++i) CHECK(g12[i]->value == gf[i]->value);

    fs::remove_all(dir);
    fs::remove_all(temp_dir("isolation2"));
}

TEST_CASE("pipeline rejects degenerate datasets") {
    PairedDataset ds;
    ds.x_I = Tensor({6, 2});
    ds.x_S = Tensor({6, 2});
    ds.y = {0, 0, 0, 0, 0, 0};
    ds.label_names = {"only"};
    ds.splits.train = {0, 1, 2, 3};
    ds.splits.val = {4, 5};
    CHECK_THROWS_AS(run_pipeline(ds, bench_cfg(1)), DataError);
}

TEST_CASE("superior classifier outperforms inferior on the gapped benchmark") {
    const PairedDataset ds = bench_ds(1);
    const PipelineConfig cfg = bench_cfg(1);
    PipelineResult res = run_pipeline(ds, cfg);

    REQUIRE(res.stages.size() == 5);
    CHECK(res.stages[0].stage == "stage1_I");
    CHECK(res.stages[1].stage == "stage1_S");
    CHECK(res.stages[1].best_val_metric > res.stages[0].best_val_metric);

    const auto& rows = res.report.tasks.at("diagnosis");
    CHECK(rows.at("S").ba > rows.at("I").ba);
}

TEST_CASE("equal seeds reproduce the pipeline bit for bit") {
    const PairedDataset ds = bench_ds(2, 300);
    PipelineConfig cfg = bench_cfg(2);
    shrink_stages(cfg, 25);

    PipelineResult a = run_pipeline(ds, cfg);
    PipelineResult b = run_pipeline(ds, cfg);

    CHECK(a.report.to_json().dump() == b.report.to_json().dump());
    REQUIRE(a.stages.size() == b.stages.size());
    for (std::size_t s = 0; s < a.stages.size(); ++s) {
        CHECK(a.stages[s].best_epoch == b.stages[s].best_epoch);
        CHECK(a.stages[s].best_val_metric == b.stages[s].best_val_metric);
        REQUIRE(a.stages[s].curve.size() == b.stages[s].curve.size());
        for (std::size_t i = 0; i < a.stages[s].curve.size(); ++i) {
            CHECK(a.stages[s].curve[i].loss == b.stages[s].curve[i].loss);
        }
    }
    CHECK(a.test_predictions == b.test_predictions);

    // a different seed actually changes the run
    PipelineResult c = run_pipeline(ds, cfg.reseeded(3));
    CHECK(a.report.to_json().dump() != c.report.to_json().dump());
}

TEST_CASE("run directory carries the full artifact set and is reproducible") {
    const PairedDataset ds = bench_ds(5, 300);
    PipelineConfig cfg = bench_cfg(5);
    shrink_stages(cfg, 20);

    const fs::path dir = temp_dir("artifacts");
    PipelineResult res = run_pipeline(ds, cfg, dir);

    for (const char* name : {"stage1_I.ckpt", "stage1_S.ckpt", "stage2_G.ckpt",
                             "stage3_Dc.ckpt", "stage3_Dsi.ckpt", "report.json",
                             "predictions.json", "curves.csv"}) {
        CHECK(fs::exists(dir / name));
    }

    // report on disk equals the in-memory one
    std::ifstream rf(dir / "report.json");
    nlohmann::json rj;
    rf >> rj;
    CHECK(rj == res.report.to_json());

    // per-sample predictions cover every method row at test-set length
    std::ifstream pf(dir / "predictions.json");
    nlohmann::json pj;
    pf >> pj;
    CHECK(pj.at("labels").size() == ds.splits.test.size());
    for (const std::string& row : method_rows()) {
        CHECK(pj.at("rows").at(row).size() == ds.splits.test.size());
    }

    // curves: header plus stage-tagged rows for all five stages
    std::ifstream cf(dir / "curves.csv");
    std::string header;
    std::getline(cf, header);
    CHECK(header == "stage,epoch,split,loss,ba");
    std::set<std::string> stages_seen;
    std::string line;
    std::size_t guidance_blank_ba = 0;
    while (std::getline(cf, line)) {
        if (line.empty()) continue;
        const std::string stage = line.substr(0, line.find(','));
        stages_seen.insert(stage);
        if (stage == "stage2_G" && line.back() == ',') ++guidance_blank_ba;
    }
    CHECK(stages_seen ==
          std::set<std::string>{"stage1_I", "stage1_S", "stage2_G", "stage3_Dc", "stage3_Dsi"});
    CHECK(guidance_blank_ba > 0); // regression rows leave the ba column empty

    // rerunning with the same seed rewrites byte-identical reports
    std::stringstream first;
    first << std::ifstream(dir / "report.json").rdbuf();
    run_pipeline(ds, cfg, dir);
    std::stringstream second;
    second << std::ifstream(dir / "report.json").rdbuf();
    CHECK(first.str() == second.str());

    // checkpoints reload into the same weights the run returned
    Classifier inferior = load_classifier((dir / "stage1_I.ckpt").string());
    const auto loaded = inferior.encoder().params();
    const auto live = res.bundle.inferior.encoder().params();
    REQUIRE(loaded.size() == live.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i]->value == live[i]->value);
    }

    fs::remove_all(dir);
}

TEST_CASE("stage subsets demand their upstream artifacts") {
    const PairedDataset ds = bench_ds(7, 240);
    PipelineConfig cfg = bench_cfg(7);
    shrink_stages(cfg, 10);

    const fs::path dir = temp_dir("deps");

    try {
        run_pipeline_stages(ds, cfg, dir, {2});
        FAIL("expected ArtifactError");
    } catch (const ArtifactError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("stage 2") != std::string::npos);
        CHECK(msg.find("stage1_I.ckpt") != std::string::npos);
    }

    run_pipeline_stages(ds, cfg, dir, {1});
    try {
        run_pipeline_stages(ds, cfg, dir, {3});
        FAIL("expected ArtifactError");
    } catch (const ArtifactError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("stage 3") != std::string::npos);
        CHECK(msg.find("stage2_G.ckpt") != std::string::npos);
    }

    // with stage 2 in place, stage 3 completes and emits the report
    run_pipeline_stages(ds, cfg, dir, {2});
    PipelineResult res = run_pipeline_stages(ds, cfg, dir, {3});
    CHECK(res.report.tasks.count("diagnosis") == 1);
    CHECK(fs::exists(dir / "report.json"));

    CHECK_THROWS_AS(run_pipeline_stages(ds, cfg, dir, {}), ConfigError);
    CHECK_THROWS_AS(run_pipeline_stages(ds, cfg, dir, {4}), ConfigError);

    fs::remove_all(dir);
}

TEST_CASE("training never touches the test split") {
    const PairedDataset ds = bench_ds(8, 300);
    PipelineConfig cfg = bench_cfg(8);
    shrink_stages(cfg, 15);

    PipelineResult res = run_pipeline(ds, cfg);

    CHECK(res.audit.clean(ds.splits));
    CHECK(res.audit.touched_count() > 0);

    // everything touched sits in train or val
    std::set<std::size_t> allowed(ds.splits.train.begin(), ds.splits.train.end());
    allowed.insert(ds.splits.val.begin(), ds.splits.val.end());
    for (std::size_t i = 0; i < res.audit.touched.size(); ++i) {
        if (res.audit.touched[i]) CHECK(allowed.count(i) == 1);
    }
    // non-WRS stages sweep every training row each epoch
    for (std::size_t i : ds.splits.train) CHECK(res.audit.touched[i]);
}

TEST_CASE("tied rows render a zero delta and unit p-value") {
    const PairedDataset ds = bench_ds(9, 240);
    BundleSpec spec;
    spec.d_I = 32;
    spec.d_S = 32;
    spec.num_classes = 3;
    spec.latent_I = 8;
    spec.latent_S = 8;
    spec.encoder_hidden = {16};
    spec.decoder_hidden = {};
    spec.bottleneck = 4;
    ModelBundle bundle = make_bundle(spec, 5);
    // zero every decoder: all rows emit constant logits, so all five methods
    // predict the same class everywhere and tie exactly
    for (Parameter* p : bundle.params_of({"D_I", "D_S", "D_c"})) p->value.fill(0.0);
    Mlp fusion(MlpSpec{16, 3});

    MetricsReport report = evaluate_all(bundle, fusion, ds, "diagnosis");
    const auto& rows = report.tasks.at("diagnosis");
    CHECK(rows.at("I").ba == rows.at("G(I)+I").ba);
    CHECK(report.delta_pct.at("diagnosis").at("ba") == 0.0);
    CHECK(report.delta_pct.at("diagnosis").at("f1") == 0.0);
    CHECK(report.mcnemar.at("diagnosis") == 1.0);
    CHECK_FALSE(rows.at("I").auroc.has_value()); // three classes: no auroc
}

TEST_CASE("binary tasks report auroc for every row") {
    SynthSpec spec;
    spec.num_classes = 2;
    spec.priors = {3.0, 1.0};
    spec.n = 240;
    spec.seed = 12;
    spec.split_fractions = {0.6, 0.2, 0.2};
    const PairedDataset ds = generate(spec);

    BundleSpec ms;
    ms.d_I = 32;
    ms.d_S = 32;
    ms.num_classes = 2;
    ms.latent_I = 8;
    ms.latent_S = 8;
    ms.encoder_hidden = {16};
    ms.decoder_hidden = {};
    ms.bottleneck = 4;
    ModelBundle bundle = make_bundle(ms, 6);
    for (Parameter* p : bundle.params_of({"D_I", "D_S", "D_c"})) p->value.fill(0.0);
    Mlp fusion(MlpSpec{16, 2});

    MetricsReport report = evaluate_all(bundle, fusion, ds, "melanoma");
    for (const std::string& row : method_rows()) {
        REQUIRE(report.tasks.at("melanoma").at(row).auroc.has_value());
        CHECK(*report.tasks.at("melanoma").at(row).auroc == 0.5); // constant scores tie all pairs
    }
    CHECK(report.delta_pct.at("melanoma").at("auroc") == 0.0);
}

TEST_CASE("guided model beats the inferior baseline across the benchmark seeds") {
    int guided_wins = 0;
    int superior_wins = 0;
    int ordering_holds = 0;
    double mean_gain = 0.0;

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PairedDataset ds = bench_ds(seed, 2000);
        PipelineResult res = run_pipeline(ds, bench_cfg(seed));
        const auto& rows = res.report.tasks.at("diagnosis");
        const double ba_i = rows.at("I").ba;
        const double ba_s = rows.at("S").ba;
        const double ba_f = rows.at("G(I)+I").ba;
        const double ba_si = rows.at("S+I").ba;
        if (ba_f > ba_i) ++guided_wins;
        if (ba_s > ba_i) ++superior_wins;
        if (ba_si >= ba_f - 0.02 && ba_f > ba_i) ++ordering_holds;
        mean_gain += (ba_f - ba_i) / 5.0;
    }

    CHECK(superior_wins == 5);
    CHECK(guided_wins >= 4);
    CHECK(ordering_holds >= 4);
    CHECK(mean_gain >= 0.01);
}
