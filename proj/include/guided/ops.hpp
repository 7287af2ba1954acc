#pragma once

#include <vector>

#include "guided/graph.hpp"

namespace guided {

// Differentiable primitives. Each registers a node with the operands' graph
// and wires the corresponding backward rule.

/// Matrix product [m x k] * [k x n] -> [m x n].
Var matmul(Var a, Var b);

/// Adds a length-d bias row to every row of an [n x d] tensor.
Var add_row(Var x, Var bias);

/// Elementwise max(0, x). Subgradient at 0 is 0.
Var relu(Var x);

/// Row-wise softmax of [n x K] logits, K >= 2, max-subtracted for stability.
Var softmax(Var logits);

/// Column concatenation [n x p] ++ [n x q] -> [n x (p+q)]; the gradient is
/// split back at column p.
Var concat(Var a, Var b);

/// Sum of all elements, as a scalar node.
Var sum(Var x);

/// Mean of squared elementwise differences.
Var mse_loss(Var pred, Var target);

/// Weighted cross-entropy over [n x K] logits with integer labels:
/// sum_i w[y_i] * (-log softmax(logits)_i[y_i]) / sum_i w[y_i].
Var weighted_cross_entropy(Var logits, const std::vector<int>& labels,
                           const std::vector<double>& weights);

/// Unweighted cross-entropy (all class weights 1).
Var cross_entropy(Var logits, const std::vector<int>& labels);

// Forward-only tensor helpers (no graph involved).

/// Row-wise softmax of a plain tensor.
Tensor softmax_values(const Tensor& logits);

/// Index of the row maximum (first maximum wins on ties).
std::vector<int> argmax_rows(const Tensor& t);

} // namespace guided
