#include "guided/graph.hpp"

#include "guided/errors.hpp"

namespace guided {

Var Graph::constant(Tensor value) {
    return make_node(std::move(value), {}, nullptr);
}

Var Graph::leaf(Parameter& p) {
    Var v = make_node(p.value, {}, nullptr);
    nodes_[v.node].param = &p;
    return v;
}

Var Graph::make_node(Tensor value, std::vector<int> inputs, BackwardFn backward) {
    for (int in : inputs) {
        if (in < 0 || in >= static_cast<int>(nodes_.size())) {
            throw UsageError("graph node input out of range");
        }
    }
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

int Graph::check(Var v) const {
    if (v.graph != this) throw UsageError("Var does not belong to this graph");
    if (v.node < 0 || v.node >= static_cast<int>(nodes_.size())) {
        throw UsageError("Var refers to a nonexistent node");
    }
    return v.node;
}

void Graph::backward(Var loss) {
    int root = check(loss);
    if (!nodes_[root].value.is_scalar()) {
        throw UsageError("backward() requires a scalar root, got shape " +
                         shape_str(nodes_[root].value.shape()));
    }

    // Creation order is topological, so one reverse scan visits each
    // reachable node exactly once with its gradient complete.
    std::vector<char> reachable(root + 1, 0);
    reachable[root] = 1;
    for (int id = 0; id <= root; ++id) {
        nodes_[id].grad = Tensor(nodes_[id].value.shape());
    }
    nodes_[root].grad.fill(1.0);

    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!reachable[id]) continue;
        for (int in : n.inputs) reachable[in] = 1;
        if (n.backward) n.backward(*this, id);
        if (n.param != nullptr && !n.param->frozen) {
            auto& acc = n.param->grad.data();
            const auto& g = n.grad.data();
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
        }
    }
}

} // namespace guided
