#include "gpga/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "gpga/kernels.hpp"

namespace gpga {

namespace {

// Softmax and LogSoftmax treat a matrix row-wise and a bare vector as one row.
void row_dims(const Tensor& t, std::size_t& rows, std::size_t& cols) {
    if (t.shape.size() == 2) {
        rows = t.shape[0];
        cols = t.shape[1];
    } else {
        rows = 1;
        cols = t.size();
    }
}

NodePtr make(OpKind op, std::vector<NodePtr> inputs, Tensor value) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->inputs = std::move(inputs);
    n->value = std::move(value);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    return n;
}

void accumulate(const NodePtr& n, const Tensor& g) {
    if (!n->requires_grad) return;
    if (!n->grad_ready) {
        n->grad = Tensor::zeros(n->value.shape);
        n->grad_ready = true;
    }
    for (std::size_t i = 0; i < g.size(); ++i) n->grad.data[i] += g.data[i];
}

}  // namespace

NodePtr Node::leaf(Tensor v, bool needs_grad) {
    auto n = std::make_shared<Node>();
    n->op = OpKind::Leaf;
    n->value = std::move(v);
    n->requires_grad = needs_grad;
    return n;
}

NodePtr add(NodePtr a, NodePtr b) {
    require(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor v = a->value;
    for (std::size_t i = 0; i < v.size(); ++i) v.data[i] += b->value.data[i];
    return make(OpKind::Add, {std::move(a), std::move(b)}, std::move(v));
}

NodePtr add_rowvec(NodePtr a, NodePtr b) {
    require(a->value.shape.size() == 2 && b->value.size() == a->value.shape[1], "add_rowvec: shape mismatch");
    Tensor v = a->value;
    const std::size_t m = v.shape[0], n = v.shape[1];
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) v.data[i * n + j] += b->value.data[j];
    return make(OpKind::AddRowVec, {std::move(a), std::move(b)}, std::move(v));
}

NodePtr sub(NodePtr a, NodePtr b) {
    require(a->value.same_shape(b->value), "sub: shape mismatch");
    Tensor v = a->value;
    for (std::size_t i = 0; i < v.size(); ++i) v.data[i] -= b->value.data[i];
    return make(OpKind::Sub, {std::move(a), std::move(b)}, std::move(v));
}

NodePtr neg(NodePtr a) {
    Tensor v = a->value;
    for (auto& x : v.data) x = -x;
    return make(OpKind::Neg, {std::move(a)}, std::move(v));
}

NodePtr mul(NodePtr a, NodePtr b) {
    require(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor v = a->value;
    for (std::size_t i = 0; i < v.size(); ++i) v.data[i] *= b->value.data[i];
    return make(OpKind::Mul, {std::move(a), std::move(b)}, std::move(v));
}

NodePtr scale(NodePtr a, double c) {
    Tensor v = a->value;
    for (auto& x : v.data) x *= c;
    auto n = make(OpKind::Scale, {std::move(a)}, std::move(v));
    n->attr_a = c;
    return n;
}

NodePtr matmul(NodePtr a, NodePtr b) {
    require(a->value.shape.size() == 2 && b->value.shape.size() == 2 && a->value.shape[1] == b->value.shape[0],
            "matmul: shape mismatch");
    const std::size_t m = a->value.shape[0], k = a->value.shape[1], n = b->value.shape[1];
    Tensor v = Tensor::zeros({m, n});
    kernels::matmul(a->value.data.data(), b->value.data.data(), v.data.data(), m, k, n);
    return make(OpKind::MatMul, {std::move(a), std::move(b)}, std::move(v));
}

NodePtr conv2d(NodePtr x, NodePtr w, NodePtr bias, std::size_t stride) {
    require(x->value.shape.size() == 4 && w->value.shape.size() == 4, "conv2d: expects 4-d input and weights");
    require(x->value.shape[1] == w->value.shape[1], "conv2d: channel mismatch");
    require(w->value.shape[2] == w->value.shape[3], "conv2d: square kernels only");
    kernels::Conv2dDims d{x->value.shape[0], x->value.shape[1], x->value.shape[2], x->value.shape[3],
                          w->value.shape[0], w->value.shape[2], stride};
    require(bias->value.size() == d.out_c, "conv2d: bias size mismatch");
    Tensor v = Tensor::zeros({d.batch, d.out_c, d.out_h(), d.out_w()});
    kernels::conv2d_forward(x->value.data.data(), w->value.data.data(), bias->value.data.data(), v.data.data(), d);
    auto n = make(OpKind::Conv2d, {std::move(x), std::move(w), std::move(bias)}, std::move(v));
    n->attr_index = stride;
    return n;
}

NodePtr relu(NodePtr a) {
    Tensor v = a->value;
    for (auto& x : v.data) x = x > 0.0 ? x : 0.0;
    return make(OpKind::Relu, {std::move(a)}, std::move(v));
}

NodePtr expn(NodePtr a) {
    Tensor v = a->value;
    for (auto& x : v.data) x = std::exp(x);
    return make(OpKind::Exp, {std::move(a)}, std::move(v));
}

NodePtr logn(NodePtr a) {
    Tensor v = a->value;
    for (auto& x : v.data) x = std::log(x);
    return make(OpKind::Log, {std::move(a)}, std::move(v));
}

NodePtr absn(NodePtr a) {
    Tensor v = a->value;
    for (auto& x : v.data) x = std::fabs(x);
    return make(OpKind::Abs, {std::move(a)}, std::move(v));
}

NodePtr clampn(NodePtr a, double lo, double hi) {
    Tensor v = a->value;
    for (auto& x : v.data) x = x < lo ? lo : (x > hi ? hi : x);
    auto n = make(OpKind::Clamp, {std::move(a)}, std::move(v));
    n->attr_a = lo;
    n->attr_b = hi;
    return n;
}

NodePtr sum_all(NodePtr a) {
    double s = 0.0;
    for (double x : a->value.data) s += x;
    return make(OpKind::SumAll, {std::move(a)}, Tensor::scalar(s));
}

NodePtr dotn(NodePtr a, NodePtr b) {
    require(a->value.size() == b->value.size(), "dot: length mismatch");
    Tensor v = Tensor::scalar(dot(a->value, b->value));
    return make(OpKind::Dot, {std::move(a), std::move(b)}, std::move(v));
}

NodePtr l2norm(NodePtr a) {
    Tensor v = Tensor::scalar(l2_norm(a->value));
    return make(OpKind::L2Norm, {std::move(a)}, std::move(v));
}

NodePtr div_scalar(NodePtr t, NodePtr s, double eps) {
    require(s->value.is_scalar(), "div_scalar: divisor must be a scalar node");
    const double denom = s->value.data[0] + eps;
    require(denom != 0.0, "div_scalar: division by zero");
    Tensor v = t->value;
    for (auto& x : v.data) x /= denom;
    auto n = make(OpKind::DivScalar, {std::move(t), std::move(s)}, std::move(v));
    n->attr_a = eps;
    return n;
}

NodePtr softmax(NodePtr a) {
    std::size_t rows, cols;
    row_dims(a->value, rows, cols);
    Tensor v = a->value;
    for (std::size_t i = 0; i < rows; ++i) {
        double* r = v.data.data() + i * cols;
        double mx = r[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += (r[j] = std::exp(r[j] - mx));
        for (std::size_t j = 0; j < cols; ++j) r[j] /= s;
    }
    return make(OpKind::Softmax, {std::move(a)}, std::move(v));
}

NodePtr log_softmax(NodePtr a) {
    std::size_t rows, cols;
    row_dims(a->value, rows, cols);
    Tensor v = a->value;
    for (std::size_t i = 0; i < rows; ++i) {
        double* r = v.data.data() + i * cols;
        double mx = r[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += std::exp(r[j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < cols; ++j) r[j] -= lse;
    }
    return make(OpKind::LogSoftmax, {std::move(a)}, std::move(v));
}

NodePtr gather(NodePtr a, std::size_t flat_index) {
    require(flat_index < a->value.size(), "gather: index out of range");
    Tensor v = Tensor::scalar(a->value.data[flat_index]);
    auto n = make(OpKind::Gather, {std::move(a)}, std::move(v));
    n->attr_index = flat_index;
    return n;
}

NodePtr reshape(NodePtr a, std::vector<std::size_t> new_shape) {
    require(Tensor::numel(new_shape) == a->value.size(), "reshape: element count mismatch");
    Tensor v(std::move(new_shape), a->value.data);
    return make(OpKind::Reshape, {std::move(a)}, std::move(v));
}

namespace {

void backprop_node(Node* n) {
    const Tensor& g = n->grad;
    switch (n->op) {
        case OpKind::Leaf:
            break;
        case OpKind::Add:
            accumulate(n->inputs[0], g);
            accumulate(n->inputs[1], g);
            break;
        case OpKind::AddRowVec: {
            accumulate(n->inputs[0], g);
            if (n->inputs[1]->requires_grad) {
                const std::size_t m = n->value.shape[0], cols = n->value.shape[1];
                Tensor gb = Tensor::zeros({cols});
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < cols; ++j) gb.data[j] += g.data[i * cols + j];
                accumulate(n->inputs[1], gb);
            }
            break;
        }
        case OpKind::Sub: {
            accumulate(n->inputs[0], g);
            if (n->inputs[1]->requires_grad) {
                Tensor gb = g;
                for (auto& x : gb.data) x = -x;
                accumulate(n->inputs[1], gb);
            }
            break;
        }
        case OpKind::Neg: {
            Tensor ga = g;
            for (auto& x : ga.data) x = -x;
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Mul: {
            if (n->inputs[0]->requires_grad) {
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= n->inputs[1]->value.data[i];
                accumulate(n->inputs[0], ga);
            }
            if (n->inputs[1]->requires_grad) {
                Tensor gb = g;
                for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] *= n->inputs[0]->value.data[i];
                accumulate(n->inputs[1], gb);
            }
            break;
        }
        case OpKind::Scale: {
            Tensor ga = g;
            for (auto& x : ga.data) x *= n->attr_a;
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::MatMul: {
            const auto& a = n->inputs[0]->value;
            const auto& b = n->inputs[1]->value;
            const std::size_t m = a.shape[0], k = a.shape[1], cols = b.shape[1];
            if (n->inputs[0]->requires_grad) {
                Tensor ga = Tensor::zeros(a.shape);
                kernels::matmul_nt(g.data.data(), b.data.data(), ga.data.data(), m, cols, k);
                accumulate(n->inputs[0], ga);
            }
            if (n->inputs[1]->requires_grad) {
                Tensor gb = Tensor::zeros(b.shape);
                kernels::matmul_tn(a.data.data(), g.data.data(), gb.data.data(), m, k, cols);
                accumulate(n->inputs[1], gb);
            }
            break;
        }
        case OpKind::Conv2d: {
            const auto& x = n->inputs[0]->value;
            const auto& w = n->inputs[1]->value;
            kernels::Conv2dDims d{x.shape[0], x.shape[1], x.shape[2], x.shape[3], w.shape[0], w.shape[2],
                                  n->attr_index};
            if (n->inputs[0]->requires_grad) {
                Tensor gx = Tensor::zeros(x.shape);
                kernels::conv2d_backward_input(g.data.data(), w.data.data(), gx.data.data(), d);
                accumulate(n->inputs[0], gx);
            }
            if (n->inputs[1]->requires_grad || n->inputs[2]->requires_grad) {
                Tensor gw = Tensor::zeros(w.shape);
                Tensor gb = Tensor::zeros({d.out_c});
                kernels::conv2d_backward_weights(g.data.data(), x.data.data(), gw.data.data(), gb.data.data(), d);
                accumulate(n->inputs[1], gw);
                accumulate(n->inputs[2], gb);
            }
            break;
        }
        case OpKind::Relu: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i)
                if (n->inputs[0]->value.data[i] <= 0.0) ga.data[i] = 0.0;
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Exp: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= n->value.data[i];
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Log: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] /= n->inputs[0]->value.data[i];
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Abs: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= sign0(n->inputs[0]->value.data[i]);
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Clamp: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i) {
                const double x = n->inputs[0]->value.data[i];
                if (x <= n->attr_a || x >= n->attr_b) ga.data[i] = 0.0;
            }
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::SumAll: {
            accumulate(n->inputs[0], Tensor::full(n->inputs[0]->value.shape, g.data[0]));
            break;
        }
        case OpKind::Dot: {
            const double g0 = g.data[0];
            if (n->inputs[0]->requires_grad) {
                Tensor ga = n->inputs[1]->value;
                for (auto& x : ga.data) x *= g0;
                ga.shape = n->inputs[0]->value.shape;
                accumulate(n->inputs[0], ga);
            }
            if (n->inputs[1]->requires_grad) {
                Tensor gb = n->inputs[0]->value;
                for (auto& x : gb.data) x *= g0;
                gb.shape = n->inputs[1]->value.shape;
                accumulate(n->inputs[1], gb);
            }
            break;
        }
        case OpKind::L2Norm: {
            const double norm = n->value.data[0];
            Tensor ga = n->inputs[0]->value;
            const double f = norm > 0.0 ? g.data[0] / norm : 0.0;
            for (auto& x : ga.data) x *= f;
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::DivScalar: {
            const double denom = n->inputs[1]->value.data[0] + n->attr_a;
            if (n->inputs[0]->requires_grad) {
                Tensor ga = g;
                for (auto& x : ga.data) x /= denom;
                accumulate(n->inputs[0], ga);
            }
            if (n->inputs[1]->requires_grad) {
                double s = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) s += g.data[i] * n->inputs[0]->value.data[i];
                accumulate(n->inputs[1], Tensor::scalar(-s / (denom * denom)));
            }
            break;
        }
        case OpKind::Softmax: {
            std::size_t rows, cols;
            row_dims(n->value, rows, cols);
            Tensor ga = Tensor::zeros(n->value.shape);
            for (std::size_t i = 0; i < rows; ++i) {
                const double* s = n->value.data.data() + i * cols;
                const double* gr = g.data.data() + i * cols;
                double gs = 0.0;
                for (std::size_t j = 0; j < cols; ++j) gs += gr[j] * s[j];
                for (std::size_t j = 0; j < cols; ++j) ga.data[i * cols + j] = s[j] * (gr[j] - gs);
            }
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::LogSoftmax: {
            std::size_t rows, cols;
            row_dims(n->value, rows, cols);
            Tensor ga = Tensor::zeros(n->value.shape);
            for (std::size_t i = 0; i < rows; ++i) {
                const double* ls = n->value.data.data() + i * cols;
                const double* gr = g.data.data() + i * cols;
                double gs = 0.0;
                for (std::size_t j = 0; j < cols; ++j) gs += gr[j];
                for (std::size_t j = 0; j < cols; ++j) ga.data[i * cols + j] = gr[j] - std::exp(ls[j]) * gs;
            }
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Gather: {
            Tensor ga = Tensor::zeros(n->inputs[0]->value.shape);
            ga.data[n->attr_index] = g.data[0];
            accumulate(n->inputs[0], ga);
            break;
        }
        case OpKind::Reshape: {
            Tensor ga(n->inputs[0]->value.shape, g.data);
            accumulate(n->inputs[0], ga);
            break;
        }
    }
}

void topo_order(const NodePtr& root, std::vector<Node*>& order) {
    // Iterative post-order DFS; graphs can be deep during training loops.
    std::unordered_set<const Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node* child = node->inputs[idx++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

void backward_impl(const NodePtr& root) {
    require(root->value.is_scalar(), "backward: root must be scalar-valued");
    if (!root->requires_grad) return;
    std::vector<Node*> order;
    topo_order(root, order);
    for (Node* n : order) n->grad_ready = false;
    root->grad = Tensor::scalar(1.0);
    root->grad_ready = true;
    // Reverse topological order: each node's grad is complete before use.
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->grad_ready) backprop_node(*it);
}

}  // namespace

void backward(const NodePtr& root) { backward_impl(root); }

std::map<const Node*, Tensor> forward_backward(const NodePtr& root, const std::vector<NodePtr>& wrt) {
    require(root->value.is_scalar(), "forward_backward: root must be scalar-valued");
    backward_impl(root);
    std::map<const Node*, Tensor> out;
    for (const auto& leaf : wrt) {
        if (leaf->grad_ready)
            out[leaf.get()] = leaf->grad;
        else
            out[leaf.get()] = Tensor::zeros(leaf->value.shape);  // detached leaf
    }
    return out;
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& point, double h) {
    require(h > 0.0, "finite_difference_gradient: h must be positive");
    Tensor g = Tensor::zeros(point.shape);
    Tensor x = point;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data[i];
        x.data[i] = orig + h;
        const double fp = f(x);
        x.data[i] = orig - h;
        const double fm = f(x);
        x.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw Error("finite_difference_gradient: non-finite function value at coordinate " + std::to_string(i));
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace gpga
