#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "gpga/tensor.hpp"

namespace gpga {

enum class OpKind {
    Leaf,
    Add,          // elementwise, same shape
    AddRowVec,    // a[m,n] + b[n] broadcast over rows
    Sub,
    Neg,
    Mul,          // hadamard, same shape
    Scale,        // a * constant
    MatMul,       // a[m,k] @ b[k,n]
    Conv2d,       // (x, w, bias), stride attr
    Relu,
    Exp,
    Log,
    Abs,
    Clamp,        // clamp to [lo, hi]; gradient zero outside the open interval
    SumAll,       // -> [1]
    Dot,          // vectors -> [1]
    L2Norm,       // vector -> [1]
    DivScalar,    // tensor / (scalar node + eps)
    Softmax,      // rows of [m,n] (or a bare vector), max-subtracted
    LogSoftmax,
    Gather,       // single element by flat index -> [1]
    Reshape,
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    OpKind op = OpKind::Leaf;
    std::vector<NodePtr> inputs;
    Tensor value;
    Tensor grad;                 // allocated lazily during backward
    bool requires_grad = false;
    bool grad_ready = false;

    double attr_a = 0.0;         // Scale factor / Clamp lo / DivScalar eps
    double attr_b = 0.0;         // Clamp hi
    std::size_t attr_index = 0;  // Gather flat index / Conv2d stride

    static NodePtr leaf(Tensor v, bool needs_grad = false);
};

// Graph constructors; forward values are computed eagerly.
NodePtr add(NodePtr a, NodePtr b);
NodePtr add_rowvec(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr neg(NodePtr a);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr scale(NodePtr a, double c);
NodePtr matmul(NodePtr a, NodePtr b);
NodePtr conv2d(NodePtr x, NodePtr w, NodePtr bias, std::size_t stride);
NodePtr relu(NodePtr a);
NodePtr expn(NodePtr a);
NodePtr logn(NodePtr a);
NodePtr absn(NodePtr a);
NodePtr clampn(NodePtr a, double lo, double hi);
NodePtr sum_all(NodePtr a);
NodePtr dotn(NodePtr a, NodePtr b);
NodePtr l2norm(NodePtr a);
NodePtr div_scalar(NodePtr t, NodePtr s, double eps = 0.0);
NodePtr softmax(NodePtr a);
NodePtr log_softmax(NodePtr a);
NodePtr gather(NodePtr a, std::size_t flat_index);
NodePtr reshape(NodePtr a, std::vector<std::size_t> new_shape);

// Reverse-mode gradients of a scalar root. Fills node->grad for every node
// with requires_grad on the path; graph values are unchanged.
void backward(const NodePtr& root);

// Spec-level entry point: gradients of root w.r.t. each requested leaf.
// A leaf detached from root gets a zero gradient of its own shape.
std::map<const Node*, Tensor> forward_backward(const NodePtr& root, const std::vector<NodePtr>& wrt);

// Central finite differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& point, double h);

}  // namespace gpga
