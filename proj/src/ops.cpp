#include "guided/ops.hpp"

#include <algorithm>
#include <cmath>

#include "guided/errors.hpp"

namespace guided {

namespace {

Graph& same_graph(Var a, Var b) {
    if (a.graph == nullptr || a.graph != b.graph) {
        throw UsageError("operands belong to different graphs");
    }
    return *a.graph;
}

Graph& graph_of(Var v) {
    if (v.graph == nullptr) throw UsageError("Var is not attached to a graph");
    return *v.graph;
}

void require_2d(const Tensor& t, const char* what) {
    if (t.ndim() != 2) {
        throw ShapeError(std::string(what) + " must be 2-D, got " + shape_str(t.shape()));
    }
}

} // namespace

Var matmul(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    require_2d(A, "matmul lhs");
    require_2d(B, "matmul rhs");
    if (A.cols() != B.rows()) {
        throw ShapeError("matmul inner dimensions differ: " + shape_str(A.shape()) +
                         " vs " + shape_str(B.shape()));
    }
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double av = A.data()[i * k + l];
            const double* brow = B.data().data() + l * n;
            double* crow = C.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    int ia = a.node, ib = b.node;
    return g.make_node(std::move(C), {ia, ib}, [ia, ib, m, k, n](Graph& gr, int self) {
        const auto& G = gr.node_grad(self).data();
        const auto& Av = gr.node_value(ia).data();
        const auto& Bv = gr.node_value(ib).data();
        auto& dA = gr.node_grad_mut(ia).data();
        auto& dB = gr.node_grad_mut(ib).data();
        // dA += G * B^T
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double gv = G[i * n + j];
                for (std::size_t l = 0; l < k; ++l) dA[i * k + l] += gv * Bv[l * n + j];
            }
        }
        // dB += A^T * G
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t l = 0; l < k; ++l) {
                const double av = Av[i * k + l];
                for (std::size_t j = 0; j < n; ++j) dB[l * n + j] += av * G[i * n + j];
            }
        }
    });
}

Var add_row(Var x, Var bias) {
    Graph& g = same_graph(x, bias);
    const Tensor& X = g.value(x);
    const Tensor& B = g.value(bias);
    require_2d(X, "add_row input");
    if (B.ndim() != 1 || B.size() != X.cols()) {
        throw ShapeError("bias shape " + shape_str(B.shape()) + " does not match row width " +
                         std::to_string(X.cols()));
    }
    const std::size_t n = X.rows(), d = X.cols();
    Tensor Y = X;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) Y.data()[i * d + j] += B.data()[j];
    }
    int ix = x.node, ib = bias.node;
    return g.make_node(std::move(Y), {ix, ib}, [ix, ib, n, d](Graph& gr, int self) {
        const auto& G = gr.node_grad(self).data();
        auto& dX = gr.node_grad_mut(ix).data();
        auto& dB = gr.node_grad_mut(ib).data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                dX[i * d + j] += G[i * d + j];
                dB[j] += G[i * d + j];
            }
        }
    });
}

Var relu(Var x) {
    Graph& g = graph_of(x);
    const Tensor& X = g.value(x);
    Tensor Y = X;
    for (double& v : Y.data()) v = v > 0.0 ? v : 0.0;
    int ix = x.node;
    return g.make_node(std::move(Y), {ix}, [ix](Graph& gr, int self) {
        const auto& G = gr.node_grad(self).data();
        const auto& X2 = gr.node_value(ix).data();
        auto& dX = gr.node_grad_mut(ix).data();
        for (std::size_t i = 0; i < G.size(); ++i) {
            if (X2[i] > 0.0) dX[i] += G[i];
        }
    });
}

namespace {

Tensor softmax_rows(const Tensor& logits) {
    const std::size_t n = logits.rows(), k = logits.cols();
    Tensor out({n, k});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = logits.data().data() + i * k;
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        double* orow = out.data().data() + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            orow[j] = std::exp(row[j] - mx);
            denom += orow[j];
        }
        for (std::size_t j = 0; j < k; ++j) orow[j] /= denom;
    }
    return out;
}

} // namespace

Var softmax(Var logits) {
    Graph& g = graph_of(logits);
    const Tensor& X = g.value(logits);
    require_2d(X, "softmax input");
    if (X.cols() < 2) {
        throw ShapeError("softmax needs at least 2 classes, got " + shape_str(X.shape()));
    }
    Tensor Y = softmax_rows(X);
    const std::size_t n = X.rows(), k = X.cols();
    int ix = logits.node;
    return g.make_node(std::move(Y), {ix}, [ix, n, k](Graph& gr, int self) {
        const auto& G = gr.node_grad(self).data();
        const auto& Y2 = gr.node_value(self).data();
        auto& dX = gr.node_grad_mut(ix).data();
        for (std::size_t i = 0; i < n; ++i) {
            const double* grow = G.data() + i * k;
            const double* yrow = Y2.data() + i * k;
            double dot = 0.0;
            for (std::size_t j = 0; j < k; ++j) dot += grow[j] * yrow[j];
            for (std::size_t j = 0; j < k; ++j) dX[i * k + j] += yrow[j] * (grow[j] - dot);
        }
    });
}

Var concat(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    require_2d(A, "concat lhs");
    require_2d(B, "concat rhs");
    if (A.rows() != B.rows()) {
        throw ShapeError("concat leading dimensions differ: " + shape_str(A.shape()) + " vs " +
                         shape_str(B.shape()));
    }
    const std::size_t n = A.rows(), p = A.cols(), q = B.cols();
    Tensor C({n, p + q});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(A.data().data() + i * p, p, C.data().data() + i * (p + q));
        std::copy_n(B.data().data() + i * q, q, C.data().data() + i * (p + q) + p);
    }
    int ia = a.node, ib = b.node;
    return g.make_node(std::move(C), {ia, ib}, [ia, ib, n, p, q](Graph& gr, int self) {
        const auto& G = gr.node_grad(self).data();
        auto& dA = gr.node_grad_mut(ia).data();
        auto& dB = gr.node_grad_mut(ib).data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) dA[i * p + j] += G[i * (p + q) + j];
            for (std::size_t j = 0; j < q; ++j) dB[i * q + j] += G[i * (p + q) + p + j];
        }
    });
}

Var sum(Var x) {
    Graph& g = graph_of(x);
    const Tensor& X = g.value(x);
    double total = 0.0;
    for (double v : X.data()) total += v;
    int ix = x.node;
    return g.make_node(Tensor::scalar(total), {ix}, [ix](Graph& gr, int self) {
        const double gv = gr.node_grad(self).data()[0];
        auto& dX = gr.node_grad_mut(ix).data();
        for (double& v : dX) v += gv;
    });
}

Var mse_loss(Var pred, Var target) {
    Graph& g = same_graph(pred, target);
    const Tensor& P = g.value(pred);
    const Tensor& T = g.value(target);
    if (!P.same_shape(T)) {
        throw ShapeError("mse_loss shapes differ: " + shape_str(P.shape()) + " vs " +
                         shape_str(T.shape()));
    }
    const std::size_t m = P.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double d = P.data()[i] - T.data()[i];
        acc += d * d;
    }
    int ip = pred.node, it = target.node;
    return g.make_node(Tensor::scalar(acc / static_cast<double>(m)), {ip, it},
                       [ip, it, m](Graph& gr, int self) {
                           const double gv = gr.node_grad(self).data()[0];
                           const auto& Pv = gr.node_value(ip).data();
                           const auto& Tv = gr.node_value(it).data();
                           auto& dP = gr.node_grad_mut(ip).data();
                           auto& dT = gr.node_grad_mut(it).data();
                           const double scale = 2.0 * gv / static_cast<double>(m);
                           for (std::size_t i = 0; i < m; ++i) {
                               const double d = scale * (Pv[i] - Tv[i]);
                               dP[i] += d;
                               dT[i] -= d;
                           }
                       });
}

Var weighted_cross_entropy(Var logits, const std::vector<int>& labels,
                           const std::vector<double>& weights) {
    Graph& g = graph_of(logits);
    const Tensor& X = g.value(logits);
    require_2d(X, "cross-entropy logits");
    const std::size_t n = X.rows(), k = X.cols();
    if (labels.size() != n) {
        throw ShapeError("label count " + std::to_string(labels.size()) +
                         " does not match batch size " + std::to_string(n));
    }
    if (weights.size() != k) {
        throw ConfigError("class weight count " + std::to_string(weights.size()) +
                          " does not match " + std::to_string(k) + " classes");
    }
    for (double w : weights) {
        if (!(w > 0.0)) throw ConfigError("class weights must be positive");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw LabelError("label " + std::to_string(y) + " outside [0, " + std::to_string(k) +
                             ")");
        }
    }

    // Stable log-softmax; loss normalized by the total sample weight.
    Tensor probs = softmax_rows(X);
    double weight_total = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = X.data().data() + i * k;
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < k; ++j) lse += std::exp(row[j] - mx);
        lse = std::log(lse) + mx;
        const double w = weights[labels[i]];
        acc += w * (lse - row[labels[i]]);
        weight_total += w;
    }
    const double loss = acc / weight_total;

    int ix = logits.node;
    std::vector<int> labels_copy = labels;
    std::vector<double> weights_copy = weights;
    return g.make_node(
        Tensor::scalar(loss), {ix},
        [ix, n, k, probs = std::move(probs), labels_copy = std::move(labels_copy),
         weights_copy = std::move(weights_copy), weight_total](Graph& gr, int self) {
            const double gv = gr.node_grad(self).data()[0];
            auto& dX = gr.node_grad_mut(ix).data();
            for (std::size_t i = 0; i < n; ++i) {
                const double scale = gv * weights_copy[labels_copy[i]] / weight_total;
                const double* prow = probs.data().data() + i * k;
                for (std::size_t j = 0; j < k; ++j) {
                    double delta = prow[j];
                    if (static_cast<std::size_t>(labels_copy[i]) == j) delta -= 1.0;
                    dX[i * k + j] += scale * delta;
                }
            }
        });
}

Var cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& X = graph_of(logits).value(logits);
    require_2d(X, "cross-entropy logits");
    return weighted_cross_entropy(logits, labels, std::vector<double>(X.cols(), 1.0));
}

Tensor softmax_values(const Tensor& logits) {
    if (logits.ndim() != 2 || logits.cols() < 2) {
        throw ShapeError("softmax needs [n x K>=2] input, got " + shape_str(logits.shape()));
    }
    return softmax_rows(logits);
}

std::vector<int> argmax_rows(const Tensor& t) {
    const std::size_t n = t.rows(), k = t.cols();
    std::vector<int> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = t.data().data() + i * k;
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (row[j] > row[best]) best = j;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

} // namespace guided
