#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dlab/matrix.hpp"

namespace dlab::ad {

struct Tape;

// Handle into a Tape. Cheap to copy; only valid for the tape that made it.
struct Var {
    int id = -1;
};

enum class Activation { relu, tanh, sigmoid, silu, gelu };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

struct Node {
    Matrix value;
    Matrix grad;  // allocated on first touch, same shape as value
    bool requires_grad = false;
    std::array<int, 2> parents{-1, -1};
    std::function<void(Tape&, const Node&)> backward_fn;  // null for leaves
};

// Reverse-mode tape over dense matrices. Nodes only reference earlier nodes,
// so construction order is a topological order; backward walks ids downward
// and visits each reachable node exactly once. Leaf gradients accumulate
// across backward calls until zero_grad(); interior gradients are scratch.
struct Tape {
    std::vector<Node> nodes;

    Var leaf(Matrix value, bool requires_grad);
    Var constant(Matrix value) { return leaf(std::move(value), false); }
    Var param(Matrix value) { return leaf(std::move(value), true); }

    const Matrix& value(Var v) const { return nodes[v.id].value; }
    Matrix& grad(Var v);

    void backward(Var loss);
    void zero_grad();

    // internal: returns grad storage for a node, allocating zeros on demand
    Matrix& grad_ref(int id);
};

Var matmul(Tape& t, Var a, Var b);
Var hadamard(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var add_row_bias(Tape& t, Var x, Var bias);  // bias is 1xC, added to every row
Var activation(Tape& t, Activation kind, Var x);
Var embed(Tape& t, Var table, const std::vector<int>& indices);
Var concat_cols(Tape& t, Var a, Var b);
Var softmax_cross_entropy(Tape& t, Var logits, const std::vector<int>& labels);
Var mse(Tape& t, Var pred, const Matrix& target);
Var l1_penalty(Tape& t, const std::vector<Var>& params, double lambda);
Var reduce_mean(Tape& t, Var x);
Var reduce_sum(Tape& t, Var x);

inline Var relu(Tape& t, Var x) { return activation(t, Activation::relu, x); }
inline Var tanh(Tape& t, Var x) { return activation(t, Activation::tanh, x); }
inline Var sigmoid(Tape& t, Var x) { return activation(t, Activation::sigmoid, x); }
inline Var silu(Tape& t, Var x) { return activation(t, Activation::silu, x); }
inline Var gelu(Tape& t, Var x) { return activation(t, Activation::gelu, x); }

// Plain row-softmax with max subtraction; shared by the loss and by
// transition-operator extraction.
Matrix softmax_rows(const Matrix& logits);

}  // namespace dlab::ad
