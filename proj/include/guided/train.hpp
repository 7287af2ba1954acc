#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/graph.hpp"
#include "guided/optim.hpp"
#include "guided/tensor.hpp"

namespace guided {

/// One stage's training hyperparameters, mirroring the table columns
/// batch size / epochs / patience / optimizer / LR / loss weights / WRS.
/// patience == 0 disables early stopping (train for max_epochs).
struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 0;
    OptimKind optimizer = OptimKind::Adam;
    double lr = 1e-3;
    std::optional<std::vector<double>> class_weights;
    bool weighted_sampling = false;
    std::uint64_t seed = 1;

    /// Structural invariants (batch/epoch counts, lr, patience bound).
    void validate() const;
    /// validate() plus class-weight count == num_classes when present.
    void validate_for_classes(std::size_t num_classes) const;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// One row of the training curve; `ba` is absent for regression stages.
struct CurvePoint {
    std::size_t epoch = 0; // 1-based
    std::string split;     // "train" or "val"
    double loss = 0.0;
    std::optional<double> ba;
};

/// Outcome of one training stage. The trained parameters are left at the
/// best-validation-epoch snapshot, not the last epoch.
struct StageResult {
    std::string stage;
    std::size_t best_epoch = 0; // 1-based
    double best_val_metric = 0.0;
    bool higher_is_better = true;
    std::size_t epochs_run = 0;
    std::vector<CurvePoint> curve;
};

/// Batch forward pass: the Var holds the batch input rows.
using ForwardFn = std::function<Var(Graph&, Var)>;
/// Graph-free forward pass used for epoch-end evaluation.
using ForwardValuesFn = std::function<Tensor(const Tensor&)>;
/// Called once per sample per batch with the caller's row id; lets the
/// caller audit exactly which samples training ever touched.
using SampleAuditFn = std::function<void(std::size_t)>;

/// Mini-batch classifier training with weighted cross-entropy, optional
/// weighted random sampling, and early stopping on validation balanced
/// accuracy (strict improvement, earliest epoch wins ties). Parameters are
/// restored to the best epoch before returning. Non-finite loss ->
/// TrainingError naming the stage; empty split -> DataError.
StageResult fit_classifier(const std::string& stage_name, const ForwardFn& forward,
                           const ForwardValuesFn& forward_values,
                           const std::vector<Parameter*>& params, const Tensor& x_train,
                           const std::vector<int>& y_train, const Tensor& x_val,
                           const std::vector<int>& y_val, std::size_t num_classes,
                           const TrainConfig& cfg, const SampleAuditFn& audit = nullptr);

/// Same loop for latent regression: MSE loss, early stopping on validation
/// MSE (lower is better). Class weights are rejected and the WRS flag must
/// be off (the targets are continuous; there is no class to balance).
StageResult fit_regressor(const std::string& stage_name, const ForwardFn& forward,
                          const ForwardValuesFn& forward_values,
                          const std::vector<Parameter*>& params, const Tensor& x_train,
                          const Tensor& t_train, const Tensor& x_val, const Tensor& t_val,
                          const TrainConfig& cfg, const SampleAuditFn& audit = nullptr);

/// Weighted cross-entropy of logits against labels, outside any graph.
double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels,
                           const std::vector<double>& weights);

/// Mean squared error between two equal-shape tensors, outside any graph.
double mse_value(const Tensor& pred, const Tensor& target);

} // namespace guided
