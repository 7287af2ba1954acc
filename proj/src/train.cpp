#include "guided/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "guided/dataset.hpp"
#include "guided/errors.hpp"
#include "guided/metrics.hpp"
#include "guided/ops.hpp"
#include "guided/rng.hpp"
#include "guided/sampler.hpp"

namespace guided {

namespace {

using nlohmann::json;

std::vector<int> select_int(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

std::vector<Tensor> snapshot_params(const std::vector<Parameter*>& params) {
    std::vector<Tensor> snap;
    snap.reserve(params.size());
    for (const Parameter* p : params) snap.push_back(p->value);
    return snap;
}

void restore_params(const std::vector<Parameter*>& params, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

/// Produces the per-epoch visiting order: WRS draws train-set-size indices
/// from one persistent sampler, otherwise a persistent rng reshuffles.
class OrderSource {
public:
    OrderSource(const std::vector<int>& labels, std::size_t num_classes, std::size_t n,
                bool weighted, std::uint64_t seed)
        : n_(n), shuffle_rng_(mix_seed(seed, 0xD1)) {
        if (weighted) {
            sampler_.emplace(labels, num_classes, mix_seed(seed, 0xD0));
        } else {
            order_.resize(n);
            std::iota(order_.begin(), order_.end(), std::size_t{0});
        }
    }

    std::vector<std::size_t> next_epoch() {
        if (sampler_) return sampler_->draw(n_);
        shuffle_rng_.shuffle(order_);
        return order_;
    }

private:
    std::size_t n_;
    std::optional<WeightedSampler> sampler_;
    std::vector<std::size_t> order_;
    Rng shuffle_rng_;
};

double checked_loss(Graph& g, Var loss, const std::string& stage, std::size_t epoch) {
    const double v = g.value(loss).scalar_value();
    if (!std::isfinite(v)) {
        throw TrainingError(stage + ": non-finite training loss at epoch " +
                            std::to_string(epoch));
    }
    return v;
}

double split_ba(const std::vector<int>& y_true, const Tensor& logits, std::size_t num_classes) {
    PredictionSet p;
    p.y_true = y_true;
    p.y_pred = argmax_rows(logits);
    p.num_classes = num_classes;
    return balanced_accuracy(p);
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience > max_epochs) {
        throw ConfigError("patience " + std::to_string(patience) + " exceeds max_epochs " +
                          std::to_string(max_epochs));
    }
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (class_weights) {
        if (class_weights->empty()) throw ConfigError("class_weights present but empty");
        for (double w : *class_weights) {
            if (!(w > 0.0)) throw ConfigError("class_weights must be positive");
        }
    }
}

void TrainConfig::validate_for_classes(std::size_t num_classes) const {
    validate();
    if (class_weights && class_weights->size() != num_classes) {
        throw ConfigError("class_weights has " + std::to_string(class_weights->size()) +
                          " entries for " + std::to_string(num_classes) + " classes");
    }
}

json TrainConfig::to_json() const {
    json j;
    j["batch_size"] = batch_size;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["optimizer"] = optimizer == OptimKind::Sgd ? "sgd" : "adam";
    j["lr"] = lr;
    if (class_weights) j["class_weights"] = *class_weights;
    j["weighted_sampling"] = weighted_sampling;
    j["seed"] = seed;
    return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig cfg;
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.patience = j.value("patience", cfg.patience);
    if (j.contains("optimizer")) {
        cfg.optimizer = optim_kind_from_string(j.at("optimizer").get<std::string>());
    }
    cfg.lr = j.value("lr", cfg.lr);
    if (j.contains("class_weights") && !j.at("class_weights").is_null()) {
        cfg.class_weights = j.at("class_weights").get<std::vector<double>>();
    }
    cfg.weighted_sampling = j.value("weighted_sampling", cfg.weighted_sampling);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels,
                           const std::vector<double>& weights) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    if (labels.size() != n) throw ShapeError("labels do not match logit rows");
    double acc = 0.0;
    double total_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) row_max = std::max(row_max, logits.at(i, c));
        double lse = 0.0;
        for (std::size_t c = 0; c < k; ++c) lse += std::exp(logits.at(i, c) - row_max);
        lse = row_max + std::log(lse);
        const double w = weights[static_cast<std::size_t>(labels[i])];
        acc += w * (lse - logits.at(i, static_cast<std::size_t>(labels[i])));
        total_w += w;
    }
    return acc / total_w;
}

double mse_value(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) throw ShapeError("mse over mismatched shapes");
    const auto& a = pred.data();
    const auto& b = target.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

StageResult fit_classifier(const std::string& stage_name, const ForwardFn& forward,
                           const ForwardValuesFn& forward_values,
                           const std::vector<Parameter*>& params, const Tensor& x_train,
                           const std::vector<int>& y_train, const Tensor& x_val,
                           const std::vector<int>& y_val, std::size_t num_classes,
                           const TrainConfig& cfg, const SampleAuditFn& audit) {
    cfg.validate_for_classes(num_classes);
    if (num_classes < 2) throw DataError(stage_name + ": need at least 2 classes");
    const std::size_t n = x_train.rows();
    if (n == 0) throw DataError(stage_name + ": empty training split");
    if (x_val.rows() == 0) throw DataError(stage_name + ": empty validation split");

    const std::vector<double> weights =
        cfg.class_weights ? *cfg.class_weights : std::vector<double>(num_classes, 1.0);
    const std::vector<double> uniform(num_classes, 1.0);

    auto opt = make_optimizer(cfg.optimizer, params, cfg.lr);
    OrderSource orders(y_train, num_classes, n, cfg.weighted_sampling, cfg.seed);

    StageResult res;
    res.stage = stage_name;
    res.higher_is_better = true;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snap;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const std::vector<std::size_t> order = orders.next_epoch();
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, n);
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
            if (audit) {
                for (std::size_t i : batch) audit(i);
            }
            const Tensor xb = select_rows(x_train, batch);
            const std::vector<int> yb = select_int(y_train, batch);
            Graph g;
            Var loss = weighted_cross_entropy(forward(g, g.constant(xb)), yb, weights);
            checked_loss(g, loss, stage_name, epoch);
            g.backward(loss);
            opt->step();
        }

        const Tensor train_logits = forward_values(x_train);
        const Tensor val_logits = forward_values(x_val);
        const double train_loss = cross_entropy_value(train_logits, y_train, weights);
        const double val_loss = cross_entropy_value(val_logits, y_val, uniform);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw TrainingError(stage_name + ": non-finite training loss at epoch " +
                                std::to_string(epoch));
        }
        const double train_ba = split_ba(y_train, train_logits, num_classes);
        const double val_ba = split_ba(y_val, val_logits, num_classes);
        res.curve.push_back({epoch, "train", train_loss, train_ba});
        res.curve.push_back({epoch, "val", val_loss, val_ba});
        res.epochs_run = epoch;

        if (val_ba > best) {
            best = val_ba;
            res.best_epoch = epoch;
            best_snap = snapshot_params(params);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (cfg.patience > 0 && since_best >= cfg.patience) break;
    }

    res.best_val_metric = best;
    restore_params(params, best_snap);
    return res;
}

StageResult fit_regressor(const std::string& stage_name, const ForwardFn& forward,
                          const ForwardValuesFn& forward_values,
                          const std::vector<Parameter*>& params, const Tensor& x_train,
                          const Tensor& t_train, const Tensor& x_val, const Tensor& t_val,
                          const TrainConfig& cfg, const SampleAuditFn& audit) {
    cfg.validate();
    if (cfg.class_weights) throw ConfigError(stage_name + ": regression takes no class weights");
    if (cfg.weighted_sampling) {
        throw ConfigError(stage_name + ": weighted sampling needs class labels");
    }
    const std::size_t n = x_train.rows();
    if (n == 0) throw DataError(stage_name + ": empty training split");
    if (x_val.rows() == 0) throw DataError(stage_name + ": empty validation split");
    if (t_train.rows() != n || t_val.rows() != x_val.rows()) {
        throw ShapeError(stage_name + ": target rows do not match inputs");
    }

    auto opt = make_optimizer(cfg.optimizer, params, cfg.lr);
    OrderSource orders({}, 0, n, false, cfg.seed);

    StageResult res;
    res.stage = stage_name;
    res.higher_is_better = false;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snap;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const std::vector<std::size_t> order = orders.next_epoch();
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, n);
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
            if (audit) {
                for (std::size_t i : batch) audit(i);
            }
            const Tensor xb = select_rows(x_train, batch);
            const Tensor tb = select_rows(t_train, batch);
            Graph g;
            Var loss = mse_loss(forward(g, g.constant(xb)), g.constant(tb));
            checked_loss(g, loss, stage_name, epoch);
            g.backward(loss);
            opt->step();
        }

        const double train_mse = mse_value(forward_values(x_train), t_train);
        const double val_mse = mse_value(forward_values(x_val), t_val);
        if (!std::isfinite(train_mse) || !std::isfinite(val_mse)) {
            throw TrainingError(stage_name + ": non-finite training loss at epoch " +
                                std::to_string(epoch));
        }
        res.curve.push_back({epoch, "train", train_mse, std::nullopt});
        res.curve.push_back({epoch, "val", val_mse, std::nullopt});
        res.epochs_run = epoch;

        if (val_mse < best) {
            best = val_mse;
            res.best_epoch = epoch;
            best_snap = snapshot_params(params);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (cfg.patience > 0 && since_best >= cfg.patience) break;
    }

    res.best_val_metric = best;
    restore_params(params, best_snap);
    return res;
}

} // namespace guided
