#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "guided/tensor.hpp"

namespace guided {

/// A trainable tensor with its accumulated gradient.
///
/// Frozen parameters take part in forward computation but receive no
/// gradient and are never touched by optimizer steps.
struct Parameter {
    Tensor value;
    Tensor grad;
    bool frozen = false;

    Parameter() = default;
    explicit Parameter(Tensor v) : value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph
/// that produced it is alive.
struct Var {
    Graph* graph = nullptr;
    int node = -1;
};

/// Record of primitive operations in creation (= topological) order.
///
/// A graph is built by one thread, backward() walks it once in reverse.
/// Graphs are throwaway: one per forward/backward pass.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, int)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;

    /// Leaf holding a fixed value; receives a gradient but forwards it nowhere.
    Var constant(Tensor value);

    /// Leaf backed by a Parameter; backward accumulates into p.grad unless
    /// the parameter is frozen.
    Var leaf(Parameter& p);

    /// Registers an interior node. `backward` reads grad(self) and
    /// accumulates into the grads of `inputs`.
    Var make_node(Tensor value, std::vector<int> inputs, BackwardFn backward);

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }

    /// Gradient of the last backward() root w.r.t. this node. Zero tensor if
    /// the node was unreachable.
    const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }

    /// Reverse-mode sweep from a scalar node. Every reachable node is visited
    /// exactly once; parameter leaves accumulate into Parameter::grad.
    void backward(Var loss);

    std::size_t num_nodes() const { return nodes_.size(); }

    // Node accessors for op implementations.
    const Tensor& node_value(int id) const { return nodes_[id].value; }
    const Tensor& node_grad(int id) const { return nodes_[id].grad; }
    Tensor& node_grad_mut(int id) { return nodes_[id].grad; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<int> inputs;
        BackwardFn backward;
        Parameter* param = nullptr;
    };

    int check(Var v) const;

    // deque keeps references from value()/grad() stable while nodes append
    std::deque<Node> nodes_;
};

} // namespace guided
