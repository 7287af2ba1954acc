#pragma once

#include <memory>
#include <string>
#include <vector>

#include "guided/graph.hpp"

namespace guided {

enum class OptimKind { Sgd, Adam };

OptimKind optim_kind_from_string(const std::string& name);
std::string to_string(OptimKind kind);

/// Gradient-descent update over a fixed set of parameters. step() applies
/// the rule to non-frozen parameters and then clears all gradients; frozen
/// parameters are left bit-identical.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    void step();
    void zero_grad();

protected:
    explicit Optimizer(std::vector<Parameter*> params, double lr);
    virtual void update(std::size_t param_index, Parameter& p) = 0;
    virtual void on_step_begin() {}

    std::vector<Parameter*> params_;
    double lr_;
};

class Sgd final : public Optimizer {
public:
    Sgd(std::vector<Parameter*> params, double lr) : Optimizer(std::move(params), lr) {}

private:
    void update(std::size_t, Parameter& p) override;
};

class Adam final : public Optimizer {
public:
    Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

private:
    void on_step_begin() override { ++t_; }
    void update(std::size_t param_index, Parameter& p) override;

    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimKind kind, std::vector<Parameter*> params,
                                          double lr);

} // namespace guided
