// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/params.hpp"
#include "lagm/tensor.hpp"

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace lagm {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while
/// the owning tape is alive.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    double scalar() const { return value()(0, 0); }

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Reverse-mode recorder. Nodes are appended in evaluation order, so a
/// reverse sweep over the node list is a valid topological order.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Matrix& grad)>;

    explicit Tape(Precision precision = Precision::f64) : precision_(precision) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Precision precision() const { return precision_; }

    /// Value without gradient tracking.
    Var constant(Matrix value);
    /// Leaf whose gradient is retained and readable via `grad()` after backward.
    Var input(Matrix value);
    /// Leaf bound to a parameter; gradients flow into the GradientSet passed to backward.
    Var param(const ParameterSet& params, ParamId id);

    /// Seeds d(out)/d(out) = 1 for a 1x1 output and sweeps backward.
    void backward(Var scalar_out, GradientSet* param_grads);
    /// Seeds an arbitrary upstream gradient.
    void backward(Var out, const Matrix& seed, GradientSet* param_grads);

    const Matrix& grad(Var v) const;

    // Op construction interface.
    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
    Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
    void accumulate(int id, const Matrix& g);
    template <typename Expr>
    void accumulate_expr(int id, const Expr& g) {
        auto& node = nodes_[static_cast<std::size_t>(id)];
        if (!node.requires_grad) return;
        if (node.grad.size() == 0)
            node.grad = g;
        else
            node.grad += g;
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        ParamId param = -1;
        BackwardFn backward;
    };

    Var push(Node node);

    Precision precision_;
    std::vector<Node> nodes_;
    std::unordered_map<ParamId, int> param_nodes_;
    const ParameterSet* bound_params_ = nullptr;
};

/// Differentiable operations. Shapes follow row-major "tokens x features".
namespace ag {

Var matmul(Var a, Var b);              // a * b
Var matmul_nt(Var a, Var b);           // a * b^T
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var add_row(Var a, Var row);           // a + broadcast(row), row is 1 x cols
Var mul_row(Var a, Var row);           // a .* broadcast(row)
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);

Var gelu(Var a);
Var elu(Var a);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
Var exp(Var a);
Var clamp(Var a, double lo, double hi);   // gradient passes only strictly inside

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Softmax of an E x 1 column within each group of rows sharing a group id.
Var segment_softmax(Var logits, std::span<const int> groups);
Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5);
Var l2_normalize_rows(Var a, double eps = 1e-12);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var gather_rows(Var table, std::span<const Index> rows);
Var reshape(Var a, Index rows, Index cols);   // row-major reinterpretation
Var mean_rows(Var a);                         // 1 x cols
Var broadcast_rows(Var row, Index rows);

Var sum(Var a);                               // 1 x 1
Var mean(Var a);                              // 1 x 1
Var sum_squares(Var a);                       // 1 x 1

/// mean((a - b)^2) over all entries
Var mse(Var a, Var b);
/// mean(smooth_l1(a - b)) with transition at `beta`
Var smooth_l1(Var a, Var b, double beta = 1.0);
/// mean over entries of 0.5 * (mu^2 + exp(logvar) - 1 - logvar)
Var gaussian_kl(Var mean, Var logvar);
/// mean over rows of -log_softmax(logits)[row, target[row]]
Var cross_entropy_rows(Var logits, std::span<const Index> targets);

}  // namespace ag

}  // namespace lagm
