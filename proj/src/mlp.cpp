#include "guided/mlp.hpp"

#include <cmath>

#include "guided/errors.hpp"

namespace guided {

void MlpSpec::validate() const {
    if (layer_widths.size() < 2)
        throw ConfigError("network needs at least input and output widths");
    for (std::size_t w : layer_widths)
        if (w == 0) throw ConfigError("network layer widths must be positive");
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t l = 0; l + 1 < spec_.layer_widths.size(); ++l) {
        weights_.emplace_back(Tensor({spec_.layer_widths[l], spec_.layer_widths[l + 1]}));
        biases_.emplace_back(Tensor({spec_.layer_widths[l + 1]}));
    }
}

Mlp::Mlp(MlpSpec spec, Rng& rng) : Mlp(std::move(spec)) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const double fan_in = static_cast<double>(spec_.layer_widths[l]);
        const double fan_out = static_cast<double>(spec_.layer_widths[l + 1]);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : weights_[l].value.data()) w = rng.uniform(-bound, bound);
    }
}

Var Mlp::forward(Graph& g, Var x) {
    Var h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        h = add_row(matmul(h, g.leaf(weights_[l])), g.leaf(biases_[l]));
        if (l + 1 < weights_.size()) h = relu(h);
    }
    return h;
}

Tensor Mlp::forward_values(const Tensor& x) {
    Graph g;
    return g.value(forward(g, g.constant(x)));
}

std::vector<Parameter*> Mlp::params() {
    std::vector<Parameter*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

std::vector<std::pair<std::string, Parameter*>> Mlp::named_params() {
    std::vector<std::pair<std::string, Parameter*>> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.emplace_back("W" + std::to_string(l), &weights_[l]);
        out.emplace_back("b" + std::to_string(l), &biases_[l]);
    }
    return out;
}

void Mlp::set_frozen(bool frozen) {
    for (Parameter* p : params()) p->frozen = frozen;
}

bool Mlp::frozen() const {
    for (const Parameter& p : weights_)
        if (!p.frozen) return false;
    for (const Parameter& p : biases_)
        if (!p.frozen) return false;
    return !weights_.empty();
}

} // namespace guided
