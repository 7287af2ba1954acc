#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/tensor.hpp"

namespace guided {

/// Ground truth and model predictions over one evaluation set; `scores`
/// optionally holds row-stochastic class probabilities.
struct PredictionSet {
    std::vector<int> y_true;
    std::vector<int> y_pred;
    std::optional<Tensor> scores; // [n x K]
    std::size_t num_classes = 0;

    /// Length agreement, label ranges, and scores rows summing to 1 (1e-6).
    void validate() const;
};

/// Mean per-class recall ("macro-averaging of class-wise accuracy values").
/// A class present in no ground-truth sample makes the mean undefined ->
/// MetricError.
double balanced_accuracy(const PredictionSet& p);

/// Micro-averaged F1; for single-label multiclass this equals accuracy
/// (asserted internally against the TP/FP/FN aggregation).
double micro_f1(const PredictionSet& p);

/// Probability that a random positive outranks a random negative; ties
/// count one half (Mann-Whitney). Both classes must be present.
double auroc(const std::vector<int>& y_true, const std::vector<double>& score);

/// Exact two-sided binomial McNemar test on the discordant pair counts:
/// p = min(1, 2 * P[X <= min(b, c)]), X ~ Binomial(b + c, 1/2); p = 1 when
/// there is no discordance.
double mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b);

/// 100 * (new - base) / base. Full precision; see render_delta_percent for
/// the one-decimal table rendering.
double delta_percent(double metric_new, double metric_base);

/// One-decimal signed rendering used in the result tables, truncating toward
/// zero (e.g. 3.155 -> "+3.1", -5.68 -> "-5.6").
std::string render_delta_percent(double pct);

/// Per-method metric values for one task.
struct MethodMetrics {
    double ba = 0.0;
    double f1 = 0.0;
    std::optional<double> auroc;
};

/// Evaluation summary across tasks and method rows, serialized as
/// {task -> {method_row -> {ba, f1, auroc?}},
///  delta_pct: {task -> {metric -> pct}}, mcnemar: {task -> p}}.
struct MetricsReport {
    std::map<std::string, std::map<std::string, MethodMetrics>> tasks;
    std::map<std::string, std::map<std::string, double>> delta_pct;
    std::map<std::string, double> mcnemar;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

} // namespace guided
