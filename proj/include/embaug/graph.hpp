#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "embaug/tensor.hpp"

namespace embaug {

/// Handle to a node in a Graph. Valid only for the graph that produced it.
struct Var {
    std::uint32_t id = 0;
};

/// Reverse-mode tape. Ops evaluate eagerly and append nodes in topological
/// order; backward() walks them once in reverse. A graph is built fresh for
/// every forward pass and used from a single thread.
///
/// Leaves share storage with the caller's tensors, so gradients of parameters
/// land in the tensors the caller holds. Grads accumulate across backward
/// calls on leaves; callers zero parameter grads between steps.
class Graph {
public:
    /// With grad_enabled = false the tape records values only; backward()
    /// is then a contract error. Used to run frozen networks cheaply.
    explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    /// Leaf sharing the tensor's storage. Participates in backward iff the
    /// tensor requires grad and the graph has grad enabled.
    Var leaf(Tensor t);
    /// Leaf treated as a constant even if the tensor requires grad.
    Var constant(const Tensor& t);

    Var matmul(Var a, Var b);
    /// Same product, but each output row is computed independently, so row
    /// values are bit-stable under row permutation (blocked GEMM is not).
    Var matmul_rowwise(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    /// scale * x + shift, elementwise.
    Var affine(Var x, double scale, double shift);
    /// [r x c] matrix plus length-c row vector, broadcast over rows.
    Var add_rowwise(Var m, Var row);
    Var leaky_relu(Var x, double slope = 0.2);
    Var sigmoid(Var x);
    Var tanh(Var x);
    /// Elementwise clamp; gradient passes through inside [lo, hi], zero outside.
    Var clamp(Var x, double lo, double hi);
    /// Rank-1 softmax, max-subtracted.
    Var softmax(Var x);
    /// Rank-1 cosine similarity -> scalar. Norms below 1e-12 are degenerate.
    Var cosine_similarity(Var u, Var v);
    /// Row-wise cosine between two [m x n] matrices -> [m].
    Var cosine_rows(Var a, Var b);
    /// Elementwise binary cross-entropy of probabilities p against targets
    /// in {0,1}; p is clamped to [1e-7, 1-1e-7]. Targets are constants.
    Var bce(Var p, Var target);
    /// Horizontal concatenation [m x p] ++ [m x q] -> [m x (p+q)].
    Var concat_cols(Var a, Var b);
    Var reshape(Var x, Shape shape);
    /// Mean over each row: [r x c] -> [r].
    Var row_mean(Var m);
    /// Weighted sum of rows: weights [n] with m [n x c] -> [1 x c]. Each
    /// column accumulates its addends in sorted value order, so the result is
    /// bit-identical under any permutation of the rows.
    Var weighted_sum_rows(Var weights, Var m);
    Var sum(Var x);
    Var mean(Var x);
    /// Cross-entropy of rank-1 logits against an integer label, via
    /// log-sum-exp -> scalar.
    Var cross_entropy_with_logits(Var logits, std::size_t label);

    // By value on purpose: Tensor is a shared handle, and a reference into the
    // node list would dangle as soon as the next operation grows it.
    Tensor value(Var v) const { return nodes_[v.id].out; }
    double scalar_value(Var v) const { return nodes_[v.id].out.item(); }

    /// Reverse accumulation from a scalar loss into every grad-requiring leaf.
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }
    bool grad_enabled() const { return grad_enabled_; }

    static constexpr double kBceEps = 1e-7;
    static constexpr double kNormFloor = 1e-12;

private:
    struct Node {
        const char* op;
        std::vector<std::uint32_t> inputs;
        Tensor out;
        bool is_leaf = false;
        std::function<void()> back;  // empty when nothing upstream needs grads
    };

    Var push(const char* op, std::vector<std::uint32_t> inputs, Tensor out,
             std::function<void()> back);
    // True when gradients are enabled and this node's value carries a grad buffer.
    bool wants_grad(Var v) const;
    Tensor& out(Var v) { return nodes_[v.id].out; }

    std::vector<Node> nodes_;
    bool grad_enabled_;
};

}  // namespace embaug
