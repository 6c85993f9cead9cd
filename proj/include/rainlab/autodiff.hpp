#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rainlab/tensor.hpp"

namespace rainlab::ad {

struct Node {
    Tensor value;
    Tensor grad;  // empty until a backward pass reaches this node
    bool requires_grad = false;
    std::string op;
    std::vector<std::shared_ptr<Node>> parents;
    // Adds this node's grad into its parents' grads.
    std::function<void(Node&)> backward;
};

// Handle on a node of the recorded computation. Copies share the node.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    Tensor& mutable_grad() { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    const Shape& shape() const { return node_->value.shape(); }
    const std::shared_ptr<Node>& node() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

    void zero_grad() { node_->grad = Tensor(); }

private:
    std::shared_ptr<Node> node_;
};

// Trainable leaf.
Var parameter(Tensor value);
// Leaf that never receives gradients.
Var constant(Tensor value);

// While alive, ops on this thread do not record backward information.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// While alive, convolutions on this thread run their matrix products in
// single precision (inputs, weights and gradients are rounded to float for the
// product; results are stored as double). Roughly halves training time.
class SinglePrecisionConv {
public:
    SinglePrecisionConv();
    ~SinglePrecisionConv();
    SinglePrecisionConv(const SinglePrecisionConv&) = delete;
    SinglePrecisionConv& operator=(const SinglePrecisionConv&) = delete;

private:
    bool previous_;
};

// Cross-correlation with zero "same" padding and stride 1.
// x: (N, C, L) or (C, L); weight: (O, C, K) with K odd; bias: (O).
// Output (N, O, L) or (O, L).
Var conv1d(const Var& x, const Var& weight, const Var& bias);
// x: (N, C, H, W) or (C, H, W); weight: (O, C, KH, KW) with odd kernel sides.
Var conv2d(const Var& x, const Var& weight, const Var& bias);

Var leaky_relu(const Var& x, double slope = 0.1);
Var add(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var sum(const Var& x);

// Mean absolute / mean squared elementwise difference. Scalar output.
Var l1_loss(const Var& pred, const Var& target);
Var mse_loss(const Var& pred, const Var& target);

// Accumulates d(loss)/d(leaf) into every reachable leaf with requires_grad.
// Interior gradients are recomputed on each call, so calling twice doubles
// the leaf gradients.
void backward(const Var& loss);

}  // namespace rainlab::ad
