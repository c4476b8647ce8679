#include "doctest.h"

#include "gpga/rng.hpp"
#include "gpga/tensor.hpp"

using namespace gpga;

TEST_CASE("same seed yields identical noise tensors") {
    RngState a(42), b(42);
    const Tensor ta = uniform_noise({4, 7}, -1.0, 1.0, a);
    const Tensor tb = uniform_noise({4, 7}, -1.0, 1.0, b);
    REQUIRE(ta.data == tb.data);
}

TEST_CASE("different substreams from split are decorrelated") {
    RngState root(1);
    RngState s1 = root.split();
    RngState s2 = root.split();
    const Tensor t1 = uniform_noise({16}, 0.0, 1.0, s1);
    const Tensor t2 = uniform_noise({16}, 0.0, 1.0, s2);
    CHECK(t1.data != t2.data);
}

TEST_CASE("degenerate interval produces values at lo") {
    RngState rng(3);
    const double lo = 0.5, hi = 0.5 + 1e-15;
    const Tensor t = uniform_noise({100}, lo, hi, rng);
    for (double v : t.data) {
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
}

TEST_CASE("uniform(-1,1) empirical mean near zero") {
    RngState rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.uniform(-1.0, 1.0);
    CHECK(std::abs(sum / n) < 0.02);
}

TEST_CASE("uniform_noise rejects lo >= hi") {
    RngState rng(0);
    CHECK_THROWS_AS(uniform_noise({2}, 1.0, 1.0, rng), ContractViolation);
    CHECK_THROWS_AS(uniform_noise({2}, 2.0, 1.0, rng), ContractViolation);
}

TEST_CASE("sign convention maps zero to zero") {
    CHECK(sign0(0.0) == 0.0);
    CHECK(sign0(3.5) == 1.0);
    CHECK(sign0(-0.1) == -1.0);
}

TEST_CASE("tensor helpers") {
    Tensor t({2, 2}, {1.0, -2.0, 0.5, -0.5});
    CHECK(l1_norm(t) == doctest::Approx(4.0));
    CHECK(l2_norm(t) == doctest::Approx(std::sqrt(1.0 + 4.0 + 0.25 + 0.25)));
    clamp_inplace(t, -1.0, 1.0);
    CHECK(t.data[1] == -1.0);
    Tensor a({3}, {0.0, 2.0, 0.0});
    CHECK(argmax(a.data.data(), 3) == 1);
    Tensor b({2, 2}, {1.0, 1.0, 1.0, 1.0});
    CHECK(linf_dist(t, b) == doctest::Approx(2.0));
}
