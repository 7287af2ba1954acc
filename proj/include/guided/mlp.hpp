#pragma once

#include <string>
#include <utility>
#include <vector>

#include "guided/graph.hpp"
#include "guided/ops.hpp"
#include "guided/rng.hpp"
#include "guided/tensor.hpp"

namespace guided {

/// Fully-connected architecture description. Hidden layers use ReLU, the
/// output layer is linear.
struct MlpSpec {
    std::vector<std::size_t> layer_widths;

    MlpSpec() = default;
    MlpSpec(std::initializer_list<std::size_t> widths) : layer_widths(widths) {}
    explicit MlpSpec(std::vector<std::size_t> widths) : layer_widths(std::move(widths)) {}

    /// Throws ConfigError unless there are >= 2 positive widths.
    void validate() const;

    std::size_t in_width() const { return layer_widths.front(); }
    std::size_t out_width() const { return layer_widths.back(); }
    std::size_t num_layers() const { return layer_widths.size() - 1; }
};

class Mlp {
public:
    Mlp() = default;

    /// Zero-initialized network (used when loading from a checkpoint).
    explicit Mlp(MlpSpec spec);

    /// Glorot-uniform weights, zero biases.
    Mlp(MlpSpec spec, Rng& rng);

    const MlpSpec& spec() const { return spec_; }
    std::size_t in_width() const { return spec_.in_width(); }
    std::size_t out_width() const { return spec_.out_width(); }

    Var forward(Graph& g, Var x);

    /// Forward pass outside any training graph.
    Tensor forward_values(const Tensor& x);

    /// All parameters, layer by layer: W0, b0, W1, b1, ...
    std::vector<Parameter*> params();

    /// Parameters with stable names ("W0", "b0", ...) for serialization.
    std::vector<std::pair<std::string, Parameter*>> named_params();

    void set_frozen(bool frozen);
    bool frozen() const;

    Parameter& weight(std::size_t layer) { return weights_[layer]; }
    Parameter& bias(std::size_t layer) { return biases_[layer]; }

private:
    MlpSpec spec_;
    std::vector<Parameter> weights_; // [in x out] per layer
    std::vector<Parameter> biases_;  // [out] per layer
};

} // namespace guided
