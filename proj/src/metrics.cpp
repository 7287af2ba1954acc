#include "guided/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "guided/errors.hpp"

namespace guided {

using nlohmann::json;

void PredictionSet::validate() const {
    if (y_true.size() != y_pred.size())
        throw DataError("y_true length " + std::to_string(y_true.size()) +
                        " != y_pred length " + std::to_string(y_pred.size()));
    if (num_classes < 2) throw DataError("prediction set needs num_classes >= 2");
    for (const auto* v : {&y_true, &y_pred})
        for (int label : *v)
            if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
                throw DataError("label " + std::to_string(label) + " outside [0, " +
                                std::to_string(num_classes) + ")");
    if (scores) {
        if (scores->rows() != y_true.size() || scores->cols() != num_classes)
            throw DataError("scores shape " + shape_str(scores->shape()) +
                            " does not match n=" + std::to_string(y_true.size()) +
                            ", K=" + std::to_string(num_classes));
        for (std::size_t i = 0; i < scores->rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < scores->cols(); ++j) s += scores->at(i, j);
            if (std::fabs(s - 1.0) > 1e-6)
                throw DataError("scores row " + std::to_string(i) + " sums to " +
                                std::to_string(s) + ", expected 1");
        }
    }
}

double balanced_accuracy(const PredictionSet& p) {
    p.validate();
    std::vector<std::size_t> hit(p.num_classes, 0), total(p.num_classes, 0);
    for (std::size_t i = 0; i < p.y_true.size(); ++i) {
        total[p.y_true[i]] += 1;
        if (p.y_pred[i] == p.y_true[i]) hit[p.y_true[i]] += 1;
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        if (total[c] == 0)
            throw MetricError("class " + std::to_string(c) +
                              " has no ground-truth samples; macro recall undefined");
        acc += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    }
    return acc / static_cast<double>(p.num_classes);
}

double micro_f1(const PredictionSet& p) {
    p.validate();
    if (p.y_true.empty()) throw MetricError("micro F1 needs at least one sample");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        for (std::size_t i = 0; i < p.y_true.size(); ++i) {
            const bool is_true = p.y_true[i] == static_cast<int>(c);
            const bool is_pred = p.y_pred[i] == static_cast<int>(c);
            if (is_true && is_pred) ++tp;
            else if (is_pred) ++fp;
            else if (is_true) ++fn;
        }
    }
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);

    // In single-label multiclass every miss is one FP and one FN, so micro F1
    // collapses to accuracy; keep that identity checked.
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.y_true.size(); ++i)
        if (p.y_pred[i] == p.y_true[i]) ++hits;
    const double accuracy = static_cast<double>(hits) / static_cast<double>(p.y_true.size());
    if (std::fabs(f1 - accuracy) > 1e-12)
        throw MetricError("micro F1 diverged from accuracy on single-label input");
    return f1;
}

double auroc(const std::vector<int>& y_true, const std::vector<double>& score) {
    if (y_true.size() != score.size())
        throw DataError("auroc: label and score lengths differ");
    const std::size_t n = y_true.size();
    std::size_t pos = 0;
    for (int y : y_true) {
        if (y != 0 && y != 1) throw DataError("auroc labels must be binary 0/1");
        pos += static_cast<std::size_t>(y);
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0)
        throw MetricError("auroc needs both classes present");

    // Mann-Whitney via average ranks over tie groups.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && score[order[j]] == score[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (y_true[order[t]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(pos), q = static_cast<double>(neg);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
}

double mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
    if (correct_a.size() != correct_b.size())
        throw InputError("mcnemar: correctness vectors differ in length");
    std::size_t b = 0, c = 0;
    for (std::size_t i = 0; i < correct_a.size(); ++i) {
        if (correct_a[i] && !correct_b[i]) ++b;
        if (!correct_a[i] && correct_b[i]) ++c;
    }
    const std::size_t m = b + c;
    if (m == 0) return 1.0;
    const std::size_t k = std::min(b, c);

    // Two-sided exact binomial: 2 * P[X <= k], X ~ Bin(m, 1/2), capped at 1.
    const double log2m = static_cast<double>(m) * std::log(2.0);
    double tail = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
        const double log_comb = std::lgamma(static_cast<double>(m) + 1.0) -
                                std::lgamma(static_cast<double>(i) + 1.0) -
                                std::lgamma(static_cast<double>(m - i) + 1.0);
        tail += std::exp(log_comb - log2m);
    }
    return std::min(1.0, 2.0 * tail);
}

double delta_percent(double metric_new, double metric_base) {
    if (!(metric_base > 0.0))
        throw MetricError("delta_percent needs a positive baseline, got " +
                          std::to_string(metric_base));
    return 100.0 * (metric_new - metric_base) / metric_base;
}

std::string render_delta_percent(double pct) {
    // One decimal, truncated toward zero; a hair of slack so values that are
    // a representation wobble below a tenth boundary still land on it.
    double scaled = pct * 10.0;
    const double nearest = std::round(scaled);
    if (std::fabs(scaled - nearest) < 1e-9) scaled = nearest;
    const double shown = std::trunc(scaled) / 10.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.1f", shown);
    return buf;
}

namespace {

json method_to_json(const MethodMetrics& m) {
    json j = {{"ba", m.ba}, {"f1", m.f1}};
    if (m.auroc) j["auroc"] = *m.auroc;
    return j;
}

MethodMetrics method_from_json(const json& j) {
    MethodMetrics m;
    m.ba = j.at("ba").get<double>();
    m.f1 = j.at("f1").get<double>();
    if (j.contains("auroc")) m.auroc = j.at("auroc").get<double>();
    return m;
}

} // namespace

json MetricsReport::to_json() const {
    json j = json::object();
    for (const auto& [task, rows] : tasks) {
        json rj = json::object();
        for (const auto& [row, m] : rows) rj[row] = method_to_json(m);
        j[task] = std::move(rj);
    }
    j["delta_pct"] = delta_pct;
    j["mcnemar"] = mcnemar;
    return j;
}

MetricsReport MetricsReport::from_json(const json& j) {
    MetricsReport r;
    for (const auto& [key, value] : j.items()) {
        if (key == "delta_pct") {
            r.delta_pct = value.get<std::map<std::string, std::map<std::string, double>>>();
        } else if (key == "mcnemar") {
            r.mcnemar = value.get<std::map<std::string, double>>();
        } else {
            for (const auto& [row, mj] : value.items()) r.tasks[key][row] = method_from_json(mj);
        }
    }
    return r;
}

} // namespace guided
