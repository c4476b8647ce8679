#include "doctest.h"

#include <vector>

#include "gpga/kernels.hpp"
#include "gpga/rng.hpp"
#include "gpga/tensor.hpp"

using namespace gpga;
namespace k = gpga::kernels;

TEST_CASE("matmul matches a hand-computed 2x2 case") {
    // [1 2; 3 4] @ [5 6; 7 8] = [19 22; 43 50]
    const double a[] = {1, 2, 3, 4};
    const double b[] = {5, 6, 7, 8};
    double c[4];
    k::matmul(a, b, c, 2, 2, 2);
    CHECK(c[0] == 19.0);
    CHECK(c[1] == 22.0);
    CHECK(c[2] == 43.0);
    CHECK(c[3] == 50.0);
}

TEST_CASE("transposed variants agree with explicit transposition") {
    RngState rng(11);
    const std::size_t m = 3, kk = 4, n = 5;
    const Tensor a = uniform_noise({m, kk}, -1.0, 1.0, rng);
    const Tensor b = uniform_noise({kk, n}, -1.0, 1.0, rng);
    Tensor c = Tensor::zeros({m, n});
    k::matmul(a.data.data(), b.data.data(), c.data.data(), m, kk, n);

    // c @ b^T should equal matmul_nt(c, b).
    Tensor bt = Tensor::zeros({n, kk});
    for (std::size_t i = 0; i < kk; ++i)
        for (std::size_t j = 0; j < n; ++j) bt.data[j * kk + i] = b.data[i * n + j];
    Tensor r1 = Tensor::zeros({m, kk});
    Tensor r2 = Tensor::zeros({m, kk});
    k::matmul(c.data.data(), bt.data.data(), r1.data.data(), m, n, kk);
    k::matmul_nt(c.data.data(), b.data.data(), r2.data.data(), m, n, kk);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1.data[i] == doctest::Approx(r2.data[i]).epsilon(1e-12));

    // a^T @ c should equal matmul_tn(a, c).
    Tensor at = Tensor::zeros({kk, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < kk; ++j) at.data[j * m + i] = a.data[i * kk + j];
    Tensor r3 = Tensor::zeros({kk, n});
    Tensor r4 = Tensor::zeros({kk, n});
    k::matmul(at.data.data(), c.data.data(), r3.data.data(), kk, m, n);
    k::matmul_tn(a.data.data(), c.data.data(), r4.data.data(), m, kk, n);
    for (std::size_t i = 0; i < r3.size(); ++i) CHECK(r3.data[i] == doctest::Approx(r4.data[i]).epsilon(1e-12));
}

TEST_CASE("conv2d forward matches a hand-computed case") {
    // 1x1x3x3 input, single 2x2 kernel, stride 1, bias 0.5.
    const k::Conv2dDims d{1, 1, 3, 3, 1, 2, 1};
    const double in[] = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const double w[] = {1, 0, 0, 1};  // picks top-left + bottom-right of each window
    const double bias[] = {0.5};
    double out[4];
    k::conv2d_forward(in, w, bias, out, d);
    CHECK(out[0] == 1 + 5 + 0.5);
    CHECK(out[1] == 2 + 6 + 0.5);
    CHECK(out[2] == 4 + 8 + 0.5);
    CHECK(out[3] == 5 + 9 + 0.5);
}

TEST_CASE("serial and parallel kernels are bitwise equal") {
    RngState rng(23);
    SUBCASE("matmul family") {
        const std::size_t m = 17, kk = 13, n = 9;
        const Tensor a = uniform_noise({m, kk}, -1.0, 1.0, rng);
        const Tensor b = uniform_noise({kk, n}, -1.0, 1.0, rng);
        Tensor cs = Tensor::zeros({m, n}), cp = Tensor::zeros({m, n});
        k::matmul_serial(a.data.data(), b.data.data(), cs.data.data(), m, kk, n);
        k::matmul_omp(a.data.data(), b.data.data(), cp.data.data(), m, kk, n);
        CHECK(cs.data == cp.data);

        Tensor ds = Tensor::zeros({m, kk}), dp = Tensor::zeros({m, kk});
        k::matmul_nt_serial(cs.data.data(), b.data.data(), ds.data.data(), m, n, kk);
        k::matmul_nt_omp(cs.data.data(), b.data.data(), dp.data.data(), m, n, kk);
        CHECK(ds.data == dp.data);

        Tensor es = Tensor::zeros({kk, n}), ep = Tensor::zeros({kk, n});
        k::matmul_tn_serial(a.data.data(), cs.data.data(), es.data.data(), m, kk, n);
        k::matmul_tn_omp(a.data.data(), cs.data.data(), ep.data.data(), m, kk, n);
        CHECK(es.data == ep.data);
    }
    SUBCASE("conv2d family") {
        const k::Conv2dDims d{3, 2, 11, 11, 4, 3, 2};
        const Tensor x = uniform_noise({d.batch, d.in_c, d.in_h, d.in_w}, -1.0, 1.0, rng);
        const Tensor w = uniform_noise({d.out_c, d.in_c, d.ksize, d.ksize}, -1.0, 1.0, rng);
        const Tensor bias = uniform_noise({d.out_c}, -1.0, 1.0, rng);
        const std::vector<std::size_t> osh{d.batch, d.out_c, d.out_h(), d.out_w()};
        Tensor ys = Tensor::zeros(osh), yp = Tensor::zeros(osh);
        k::conv2d_forward_serial(x.data.data(), w.data.data(), bias.data.data(), ys.data.data(), d);
        k::conv2d_forward_omp(x.data.data(), w.data.data(), bias.data.data(), yp.data.data(), d);
        CHECK(ys.data == yp.data);

        const Tensor g = uniform_noise(osh, -1.0, 1.0, rng);
        Tensor dis = Tensor::zeros(x.shape), dip = Tensor::zeros(x.shape);
        k::conv2d_backward_input_serial(g.data.data(), w.data.data(), dis.data.data(), d);
        k::conv2d_backward_input_omp(g.data.data(), w.data.data(), dip.data.data(), d);
        CHECK(dis.data == dip.data);

        Tensor dws = Tensor::zeros(w.shape), dwp = Tensor::zeros(w.shape);
        Tensor dbs = Tensor::zeros(bias.shape), dbp = Tensor::zeros(bias.shape);
        k::conv2d_backward_weights_serial(g.data.data(), x.data.data(), dws.data.data(), dbs.data.data(), d);
        k::conv2d_backward_weights_omp(g.data.data(), x.data.data(), dwp.data.data(), dbp.data.data(), d);
        CHECK(dws.data == dwp.data);
        CHECK(dbs.data == dbp.data);
    }
}

TEST_CASE("runtime dispatch honors the parallel flag") {
    CHECK(k::parallel_enabled());
    k::set_parallel(false);
    CHECK_FALSE(k::parallel_enabled());
    k::set_parallel(true);
    CHECK(k::parallel_enabled());
}
