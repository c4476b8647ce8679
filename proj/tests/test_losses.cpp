#include "doctest.h"

#include <cmath>

#include "gpga/losses.hpp"
#include "gpga/rng.hpp"

using namespace gpga;

namespace {

Tensor rand_vec(std::size_t n, RngState& rng, double lo = -2.0, double hi = 2.0) {
    return uniform_noise({n}, lo, hi, rng);
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-6);
}

double lcd_value(const Tensor& u, const Tensor& v, const Tensor& z) {
    LogitTriple t{Node::leaf(u), Node::leaf(v), Node::leaf(z)};
    return contrastive_directional(t, SimilarityMetric::Cosine)->value.data[0];
}

}  // namespace

TEST_CASE("label smoothing identities") {
    SUBCASE("delta = 0 is the identity") {
        const Tensor y = one_hot(2, 5);
        const LabelDistribution d = smooth_labels(y, 0.0);
        CHECK(d.probs.data == y.data);
    }
    SUBCASE("N = 10, delta = 0.5 puts 0.5 on the true class") {
        const LabelDistribution d = smooth_labels(one_hot(3, 10), 0.5);
        CHECK(d.probs.data[3] == doctest::Approx(0.5).epsilon(1e-15));
        for (std::size_t i = 0; i < 10; ++i)
            if (i != 3) CHECK(d.probs.data[i] == doctest::Approx(0.5 / 9.0).epsilon(1e-15));
    }
    SUBCASE("entries sum to 1 for every delta") {
        for (double delta : {0.0, 0.1, 0.33, 0.75, 1.0}) {
            const LabelDistribution d = smooth_labels(one_hot(0, 7), delta);
            double s = 0.0;
            for (double p : d.probs.data) {
                s += p;
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
    SUBCASE("delta outside [0,1] is rejected") {
        CHECK_THROWS_AS(smooth_labels(one_hot(0, 3), -0.1), ContractViolation);
        CHECK_THROWS_AS(smooth_labels(one_hot(0, 3), 1.1), ContractViolation);
    }
}

TEST_CASE("cross-entropy of uniform logits is ln N") {
    const Tensor logits = Tensor::full({10}, 0.37);
    const NodePtr l = cross_entropy(Node::leaf(logits), one_hot(4, 10));
    CHECK(std::abs(l->value.data[0] - std::log(10.0)) < 1e-9);
}

TEST_CASE("smoothed-target gradient offset identity") {
    RngState rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = trial % 2 ? 10 : 4;
        const double delta = 0.6;
        const Tensor logits = rand_vec(n, rng);
        const std::size_t y = trial % n;

        NodePtr a1 = Node::leaf(logits, true);
        backward(cross_entropy(a1, one_hot(y, n)));
        NodePtr a2 = Node::leaf(logits, true);
        backward(cross_entropy(a2, smooth_labels(one_hot(y, n), delta).probs));

        for (std::size_t i = 0; i < n; ++i) {
            const double want = i == y ? delta : -delta / static_cast<double>(n - 1);
            CHECK(std::abs((a2->grad.data[i] - a1->grad.data[i]) - want) < 1e-12);
        }
    }
}

TEST_CASE("cw margin hand values") {
    CHECK(cw_margin(Node::leaf(Tensor({3}, {2, 1, 0})), 0)->value.data[0] == doctest::Approx(-1.0));
    CHECK(cw_margin(Node::leaf(Tensor({3}, {0, 5, 0})), 0)->value.data[0] == doctest::Approx(5.0));
}

TEST_CASE("cosine similarity basics") {
    const Tensor a({2}, {3.0, 4.0});
    CHECK(similarity(Node::leaf(a), Node::leaf(a), SimilarityMetric::Cosine)->value.data[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
    const Tensor e1({2}, {1.0, 0.0});
    const Tensor e2({2}, {0.0, 1.0});
    CHECK(similarity(Node::leaf(e1), Node::leaf(e2), SimilarityMetric::Cosine)->value.data[0] ==
          doctest::Approx(0.0));
    const Tensor na({2}, {-3.0, -4.0});
    CHECK(similarity(Node::leaf(a), Node::leaf(na), SimilarityMetric::Cosine)->value.data[0] ==
          doctest::Approx(-1.0).epsilon(1e-12));
    // Degenerate vectors are guarded, not fatal: similarity collapses to 0.
    CHECK(similarity(Node::leaf(Tensor::zeros({2})), Node::leaf(a), SimilarityMetric::Cosine)->value.data[0] ==
          doctest::Approx(0.0));
}

TEST_CASE("negative distance metrics") {
    const Tensor a({3}, {1.0, 2.0, 3.0});
    const Tensor b({3}, {0.0, 4.0, 3.0});
    CHECK(similarity(Node::leaf(a), Node::leaf(b), SimilarityMetric::NegL1)->value.data[0] ==
          doctest::Approx(-3.0));
    CHECK(similarity(Node::leaf(a), Node::leaf(b), SimilarityMetric::NegL2)->value.data[0] ==
          doctest::Approx(-std::sqrt(5.0)));
}

TEST_CASE("contrastive loss closed-form values") {
    // Symmetric point: u = z makes S(u,z) = 1; pick v with S(v,u) = 1 too.
    const Tensor u({2}, {1.0, 0.0});
    CHECK(std::abs(lcd_value(u, u, u) - std::log(2.0)) < 1e-9);
    // S(u,z) = 1, S(v,u) = -1: l_cd = log(1 + e^-2).
    const Tensor v({2}, {-1.0, 0.0});
    CHECK(std::abs(lcd_value(u, v, u) - std::log(1.0 + std::exp(-2.0))) < 1e-9);
    CHECK(std::abs(std::log(1.0 + std::exp(-2.0)) - 0.126928) < 1e-6);
}

TEST_CASE("contrastive loss is invariant to positive rescaling") {
    RngState rng(17);
    const Tensor u = rand_vec(6, rng), v = rand_vec(6, rng), z = rand_vec(6, rng);
    const double base = lcd_value(u, v, z);
    auto scaled = [](const Tensor& t, double c) {
        Tensor r = t;
        for (double& x : r.data) x *= c;
        return r;
    };
    // Invariance holds up to the cosine denominator's degenerate-vector
    // guard, which perturbs tiny norms in relative terms.
    CHECK(lcd_value(scaled(u, 3.7), v, z) == doctest::Approx(base).epsilon(1e-9));
    CHECK(lcd_value(u, scaled(v, 0.01), z) == doctest::Approx(base).epsilon(1e-9));
    CHECK(lcd_value(u, v, scaled(z, 250.0)) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("analytic contrastive gradients match autodiff and stay tangent") {
    RngState rng(53);
    for (std::size_t dim : {2u, 10u, 100u}) {
        for (int trial = 0; trial < 34; ++trial) {
            const Tensor u = rand_vec(dim, rng, 0.2, 2.0);
            const Tensor v = rand_vec(dim, rng);
            const Tensor z = rand_vec(dim, rng, 0.2, 2.0);
            const auto [gu, gz] = analytic_grad_lcd(u, v, z);

            NodePtr un = Node::leaf(u, true), vn = Node::leaf(v), zn = Node::leaf(z, true);
            backward(contrastive_directional({un, vn, zn}, SimilarityMetric::Cosine));
            for (std::size_t i = 0; i < dim; ++i) {
                CHECK(rel_err(gu.data[i], un->grad.data[i]) < 1e-5);
                CHECK(rel_err(gz.data[i], zn->grad.data[i]) < 1e-5);
            }
            CHECK(std::abs(dot(u, gu)) < 1e-10);
        }
    }
}

TEST_CASE("analytic gradient vanishes when v' = z' and u is z-aligned") {
    const Tensor z({3}, {2.0, 1.0, -1.0});
    Tensor v = z;
    for (double& x : v.data) x *= 0.5;  // same direction
    Tensor u = z;
    for (double& x : u.data) x *= 3.0;
    const auto [gu, gz] = analytic_grad_lcd(u, v, z);
    for (double g : gu.data) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("contrastive gradient agrees with finite differences") {
    RngState rng(67);
    const Tensor u = rand_vec(8, rng, 0.3, 2.0);
    const Tensor v = rand_vec(8, rng);
    const Tensor z = rand_vec(8, rng, 0.3, 2.0);
    NodePtr un = Node::leaf(u, true);
    backward(contrastive_directional({un, Node::leaf(v), Node::leaf(z)}, SimilarityMetric::Cosine));
    const Tensor fd = finite_difference_gradient(
        [&](const Tensor& p) { return lcd_value(p, v, z); }, u, 1e-5);
    for (std::size_t i = 0; i < 8; ++i) CHECK(rel_err(un->grad.data[i], fd.data[i]) < 1e-4);
}

TEST_CASE("normalized cross-entropy rescaling identities") {
    // u = [3,4], z = [1,1] -> I = [0.6, 0.8].
    const Tensor u({2}, {3.0, 4.0});
    const Tensor z({2}, {1.0, 1.0});
    NodePtr i_uz = div_scalar(mul(Node::leaf(u), Node::leaf(z)), l2norm(Node::leaf(u)), 1e-12);
    CHECK(i_uz->value.data[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(i_uz->value.data[1] == doctest::Approx(0.8).epsilon(1e-12));

    RngState rng(71);
    const Tensor ur = rand_vec(5, rng, 0.2, 2.0);
    const Tensor zr = rand_vec(5, rng);
    const Tensor y = one_hot(2, 5);
    const double base = normalized_cross_entropy(Node::leaf(ur), Node::leaf(zr), y)->value.data[0];
    Tensor us = ur;
    for (double& x : us.data) x *= 12.5;
    const double scaled = normalized_cross_entropy(Node::leaf(us), Node::leaf(zr), y)->value.data[0];
    CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("match-and-deceive decomposes exactly") {
    RngState rng(83);
    const Tensor u = rand_vec(6, rng, 0.2, 2.0);
    const Tensor v = rand_vec(6, rng, 0.2, 2.0);
    const Tensor z = rand_vec(6, rng, 0.2, 2.0);
    const Tensor y = one_hot(1, 6);
    const double lmd =
        match_and_deceive({Node::leaf(u), Node::leaf(v), Node::leaf(z)}, y, SimilarityMetric::Cosine)->value.data[0];
    const double lnce = normalized_cross_entropy(Node::leaf(u), Node::leaf(z), y)->value.data[0];
    const double lcd = lcd_value(u, v, z);
    CHECK(std::abs(lmd + lcd - lnce) < 1e-12);

    // Input gradient (shared u and z leaves) is the sum of component grads.
    NodePtr un = Node::leaf(u, true), zn = Node::leaf(z, true);
    backward(match_and_deceive({un, Node::leaf(v), zn}, y, SimilarityMetric::Cosine));
    NodePtr un2 = Node::leaf(u, true), zn2 = Node::leaf(z, true);
    backward(normalized_cross_entropy(un2, zn2, y));
    NodePtr un3 = Node::leaf(u, true), zn3 = Node::leaf(z, true);
    backward(contrastive_directional({un3, Node::leaf(v), zn3}, SimilarityMetric::Cosine));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(un->grad.data[i] == doctest::Approx(un2->grad.data[i] - un3->grad.data[i]).epsilon(1e-12));
        CHECK(zn->grad.data[i] == doctest::Approx(zn2->grad.data[i] - zn3->grad.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("kl divergence of identical logits is zero") {
    RngState rng(97);
    const Tensor a = uniform_noise({2, 4}, -2.0, 2.0, rng);
    CHECK(std::abs(kl_divergence_logits(Node::leaf(a), Node::leaf(a))->value.data[0]) < 1e-14);
    const Tensor b = uniform_noise({2, 4}, -2.0, 2.0, rng);
    CHECK(kl_divergence_logits(Node::leaf(a), Node::leaf(b))->value.data[0] > 0.0);
}
