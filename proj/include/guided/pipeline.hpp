#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/dataset.hpp"
#include "guided/metrics.hpp"
#include "guided/models.hpp"
#include "guided/train.hpp"

namespace guided {

/// Records every dataset row the training stages ever pulled into a batch
/// or used for validation-based model selection.
struct LeakageAudit {
    std::vector<bool> touched; // indexed by original dataset row

    void mark(std::size_t row);
    std::size_t touched_count() const;
    /// No test row was ever touched.
    bool clean(const Splits& splits) const;
};

/// One guided-distillation run: model widths plus the four stage protocols.
/// Input widths and the class count always come from the dataset. The
/// defaults are the calibrated benchmark recipe: linear encoders/decoders
/// (so the per-modality classifiers stay linear) with a nonlinear guidance
/// net wide enough to learn the cross-modal map.
struct PipelineConfig {
    std::string task_name = "diagnosis";
    std::uint64_t seed = 1;

    std::size_t latent_I = 32;
    std::size_t latent_S = 32;
    std::vector<std::size_t> encoder_hidden = {};
    std::vector<std::size_t> decoder_hidden = {};
    std::size_t bottleneck = 28;

    TrainConfig stage1_inferior;
    TrainConfig stage1_superior;
    TrainConfig stage2_guidance;
    TrainConfig stage3_combined; // also trains the S+I fusion decoder

    PipelineConfig(); // fills the stage protocols with benchmark defaults

    void validate() const;
    /// Copy with the run seed replaced and each stage's rng stream rederived
    /// from it, so distinct run seeds decorrelate every stage.
    PipelineConfig reseeded(std::uint64_t run_seed) const;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
};

/// Table row keys, in presentation order: S+I, S, I, G(I), G(I)+I.
const std::vector<std::string>& method_rows();

struct PipelineResult {
    ModelBundle bundle;
    Mlp fusion_decoder; // D_{S+I}, trained on [z_S ⌢ z_I]
    std::vector<StageResult> stages;
    MetricsReport report;
    std::map<std::string, std::vector<int>> test_predictions; // row -> preds
    std::vector<int> test_labels;
    LeakageAudit audit;
};

/// All three stages plus the fusion baseline and test-set evaluation, in
/// memory. Throws DataError if any training batch ever touched a test row.
PipelineResult run_pipeline(const PairedDataset& ds, const PipelineConfig& cfg);

/// Stage-subset variant persisting artifacts under run_dir: stage1_I.ckpt,
/// stage1_S.ckpt, stage2_G.ckpt, stage3_Dc.ckpt, stage3_Dsi.ckpt,
/// report.json, predictions.json, curves.csv. Stages not in `stages` are
/// loaded from run_dir instead of trained; a missing upstream checkpoint is
/// an ArtifactError naming the stage. The report is produced only when
/// stage 3 runs.
PipelineResult run_pipeline_stages(const PairedDataset& ds, const PipelineConfig& cfg,
                                   const std::filesystem::path& run_dir,
                                   const std::set<int>& stages);

/// run_pipeline_stages with all stages.
PipelineResult run_pipeline(const PairedDataset& ds, const PipelineConfig& cfg,
                            const std::filesystem::path& run_dir);

/// Test-split report over the five method rows, with the Δ% entries
/// (G(I)+I vs I, per metric) and the McNemar p-value for the same pair.
/// Binary tasks also get AUROC per row. Optionally exposes the per-row
/// predicted labels and the test labels.
MetricsReport evaluate_all(ModelBundle& bundle, Mlp& fusion_decoder, const PairedDataset& ds,
                           const std::string& task_name,
                           std::map<std::string, std::vector<int>>* predictions_out = nullptr,
                           std::vector<int>* labels_out = nullptr);

} // namespace guided
