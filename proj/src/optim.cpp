#include "guided/optim.hpp"

#include <cmath>

#include "guided/errors.hpp"

namespace guided {

OptimKind optim_kind_from_string(const std::string& name) {
    if (name == "sgd" || name == "SGD") return OptimKind::Sgd;
    if (name == "adam" || name == "Adam") return OptimKind::Adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimKind kind) {
    return kind == OptimKind::Sgd ? "sgd" : "adam";
}

Optimizer::Optimizer(std::vector<Parameter*> params, double lr)
    : params_(std::move(params)), lr_(lr) {
    if (!(lr > 0.0)) {
        throw ConfigError("learning rate must be positive, got " + std::to_string(lr));
    }
}

void Optimizer::step() {
    on_step_begin();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (!p.frozen) update(i, p);
    }
    zero_grad();
}

void Optimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void Sgd::update(std::size_t, Parameter& p) {
    auto& val = p.value.data();
    const auto& g = p.grad.data();
    for (std::size_t i = 0; i < val.size(); ++i) val[i] -= lr_ * g[i];
}

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : Optimizer(std::move(params), lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i]->value.size(), 0.0);
        v_[i].assign(params_[i]->value.size(), 0.0);
    }
}

void Adam::update(std::size_t idx, Parameter& p) {
    auto& val = p.value.data();
    const auto& g = p.grad.data();
    auto& m = m_[idx];
    auto& v = v_[idx];
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < val.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

std::unique_ptr<Optimizer> make_optimizer(OptimKind kind, std::vector<Parameter*> params,
                                          double lr) {
    if (kind == OptimKind::Sgd) return std::make_unique<Sgd>(std::move(params), lr);
    return std::make_unique<Adam>(std::move(params), lr);
}

} // namespace guided
