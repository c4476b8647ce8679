#include "doctest.h"

#include <cmath>

#include "gpga/autodiff.hpp"
#include "gpga/rng.hpp"

using namespace gpga;

namespace {

Tensor rand_t(std::vector<std::size_t> shape, RngState& rng, double lo = -1.0, double hi = 1.0) {
    return uniform_noise(std::move(shape), lo, hi, rng);
}

// Relative error with an absolute floor for near-zero references.
double rel_err(double got, double want) {
    const double denom = std::max(std::abs(want), 1e-6);
    return std::abs(got - want) / denom;
}

void check_against_fd(const std::function<NodePtr(NodePtr)>& build, const Tensor& point, double tol = 1e-4) {
    NodePtr x = Node::leaf(point, true);
    NodePtr root = build(x);
    backward(root);
    const Tensor fd = finite_difference_gradient(
        [&](const Tensor& p) {
            NodePtr xl = Node::leaf(p);
            return build(xl)->value.data[0];
        },
        point, 1e-5);
    REQUIRE(x->grad.size() == fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i)
        CHECK(rel_err(x->grad.data[i], fd.data[i]) < tol);
}

}  // namespace

TEST_CASE("grad of x*x at 3 is 6") {
    NodePtr x = Node::leaf(Tensor::scalar(3.0), true);
    NodePtr root = sum_all(mul(x, x));
    backward(root);
    CHECK(x->grad.data[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("grad of sum(x) is all ones") {
    RngState rng(5);
    NodePtr x = Node::leaf(rand_t({7}, rng), true);
    backward(sum_all(x));
    for (double g : x->grad.data) CHECK(g == 1.0);
}

TEST_CASE("shared subexpressions accumulate: d(x+x)/dx = 2") {
    NodePtr x = Node::leaf(Tensor::scalar(1.5), true);
    backward(sum_all(add(x, x)));
    CHECK(x->grad.data[0] == 2.0);
}

TEST_CASE("finite differences of x^2 at 1 give 2 within 1e-8") {
    const Tensor fd = finite_difference_gradient([](const Tensor& p) { return p.data[0] * p.data[0]; },
                                                 Tensor::scalar(1.0), 1e-5);
    CHECK(std::abs(fd.data[0] - 2.0) < 1e-8);
}

TEST_CASE("cross-entropy gradient equals softmax minus one-hot") {
    RngState rng(9);
    const std::size_t n = 10;
    const Tensor logits = rand_t({n}, rng, -2.0, 2.0);
    NodePtr a = Node::leaf(logits, true);
    Tensor y = Tensor::zeros({n});
    y.data[3] = 1.0;
    // -sum y log softmax(a)
    NodePtr loss = neg(sum_all(mul(Node::leaf(y), log_softmax(a))));
    backward(loss);
    const Tensor sm = softmax(Node::leaf(logits))->value;
    for (std::size_t i = 0; i < n; ++i)
        CHECK(a->grad.data[i] == doctest::Approx(sm.data[i] - y.data[i]).epsilon(1e-12));
}

TEST_CASE("every primitive matches central finite differences") {
    RngState rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        check_against_fd([](NodePtr x) { return sum_all(mul(x, x)); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return sum_all(expn(x)); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return sum_all(logn(x)); }, rand_t({6}, rng, 0.5, 2.0));
        check_against_fd([](NodePtr x) { return sum_all(neg(x)); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return sum_all(scale(x, -2.5)); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return l2norm(x); }, rand_t({6}, rng, 0.5, 1.5));
        check_against_fd([](NodePtr x) { return sum_all(softmax(x)); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return neg(sum_all(log_softmax(x))); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return gather(x, 2); }, rand_t({6}, rng));
        check_against_fd([](NodePtr x) { return sum_all(reshape(x, {2, 3})); }, rand_t({6}, rng));
        // abs/relu/clamp away from their kinks.
        check_against_fd([](NodePtr x) { return sum_all(absn(x)); }, rand_t({6}, rng, 0.1, 1.0));
        check_against_fd([](NodePtr x) { return sum_all(relu(x)); }, rand_t({6}, rng, 0.1, 1.0));
        check_against_fd([](NodePtr x) { return sum_all(clampn(x, -0.5, 0.5)); }, rand_t({6}, rng, -0.4, 0.4));

        RngState aux = rng.split();
        const Tensor other = rand_t({6}, aux);
        check_against_fd([&](NodePtr x) { return sum_all(add(x, Node::leaf(other))); }, rand_t({6}, rng));
        check_against_fd([&](NodePtr x) { return sum_all(sub(x, Node::leaf(other))); }, rand_t({6}, rng));
        check_against_fd([&](NodePtr x) { return dotn(x, Node::leaf(other)); }, rand_t({6}, rng));
        check_against_fd([&](NodePtr x) { return div_scalar(sum_all(x), l2norm(Node::leaf(other))); },
                         rand_t({6}, rng));

        const Tensor m2 = rand_t({3, 4}, aux);
        check_against_fd([&](NodePtr x) { return sum_all(matmul(x, Node::leaf(m2))); }, rand_t({2, 3}, rng));
        check_against_fd([&](NodePtr x) { return sum_all(matmul(Node::leaf(m2), reshape(x, {4, 2}))); },
                         rand_t({8}, rng));
        const Tensor rowv = rand_t({4}, aux);
        check_against_fd([&](NodePtr x) { return sum_all(add_rowvec(x, Node::leaf(rowv))); }, rand_t({3, 4}, rng));

        const Tensor w = rand_t({2, 1, 3, 3}, aux);
        const Tensor bias = rand_t({2}, aux);
        check_against_fd(
            [&](NodePtr x) {
                return sum_all(conv2d(reshape(x, {1, 1, 5, 5}), Node::leaf(w), Node::leaf(bias), 2));
            },
            rand_t({25}, rng));
        const Tensor img = rand_t({1, 1, 5, 5}, aux);
        check_against_fd(
            [&](NodePtr wv) {
                return sum_all(conv2d(Node::leaf(img), reshape(wv, {2, 1, 3, 3}), Node::leaf(bias), 2));
            },
            rand_t({18}, rng));
    }
}

TEST_CASE("two-layer net input gradients match finite differences") {
    RngState rng(77);
    const Tensor w1 = rand_t({5, 8}, rng);
    const Tensor b1 = rand_t({8}, rng);
    const Tensor w2 = rand_t({8, 3}, rng);
    const Tensor b2 = rand_t({3}, rng);
    auto net = [&](NodePtr x) {
        NodePtr h = relu(add_rowvec(matmul(reshape(x, {1, 5}), Node::leaf(w1)), Node::leaf(b1)));
        NodePtr logits = add_rowvec(matmul(h, Node::leaf(w2)), Node::leaf(b2));
        return neg(gather(log_softmax(logits), 1));
    };
    for (int i = 0; i < 20; ++i) check_against_fd(net, rand_t({5}, rng));
}

TEST_CASE("forward_backward returns zero gradient for a detached leaf") {
    NodePtr x = Node::leaf(Tensor::scalar(2.0), true);
    NodePtr unused = Node::leaf(Tensor::zeros({3}), true);
    auto grads = forward_backward(sum_all(mul(x, x)), {x, unused});
    CHECK(grads.at(x.get()).data[0] == doctest::Approx(4.0));
    for (double g : grads.at(unused.get()).data) CHECK(g == 0.0);
}

TEST_CASE("backward rejects a non-scalar root") {
    NodePtr x = Node::leaf(Tensor::zeros({3}), true);
    CHECK_THROWS_AS(backward(add(x, x)), ContractViolation);
}

TEST_CASE("finite differences report the coordinate of a non-finite value") {
    const Tensor point({2}, {1.0, 0.0});
    CHECK_THROWS_WITH_AS(
        finite_difference_gradient([](const Tensor& p) { return std::log(p.data[1]); }, point, 1e-5),
        doctest::Contains("coordinate"), Error);
}
