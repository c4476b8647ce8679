// Serial vs OpenMP kernel comparison. Build requires google benchmark.
#include <benchmark/benchmark.h>

#include "gpga/kernels.hpp"
#include "gpga/rng.hpp"
#include "gpga/tensor.hpp"

using gpga::kernels::Conv2dDims;

namespace {

gpga::Tensor random_tensor(std::vector<std::size_t> shape, gpga::RngState& rng) {
    return gpga::uniform_noise(std::move(shape), -1.0, 1.0, rng);
}

void bm_matmul(benchmark::State& state, bool parallel) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    gpga::RngState rng(1);
    const gpga::Tensor a = random_tensor({n, n}, rng);
    const gpga::Tensor b = random_tensor({n, n}, rng);
    gpga::Tensor c = gpga::Tensor::zeros({n, n});
    gpga::kernels::set_parallel(parallel);
    for (auto _ : state) {
        gpga::kernels::matmul(a.data.data(), b.data.data(), c.data.data(), n, n, n);
        benchmark::DoNotOptimize(c.data.data());
        benchmark::ClobberMemory();
    }
    gpga::kernels::set_parallel(true);
}

void bm_conv2d(benchmark::State& state, bool parallel) {
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    const Conv2dDims d{batch, 1, 28, 28, 8, 3, 2};
    gpga::RngState rng(2);
    const gpga::Tensor x = random_tensor({batch, 1, 28, 28}, rng);
    const gpga::Tensor w = random_tensor({8, 1, 3, 3}, rng);
    const gpga::Tensor bias = gpga::Tensor::zeros({8});
    gpga::Tensor y = gpga::Tensor::zeros({batch, 8, d.out_h(), d.out_w()});
    gpga::kernels::set_parallel(parallel);
    for (auto _ : state) {
        gpga::kernels::conv2d_forward(x.data.data(), w.data.data(), bias.data.data(), y.data.data(), d);
        benchmark::DoNotOptimize(y.data.data());
        benchmark::ClobberMemory();
    }
    gpga::kernels::set_parallel(true);
}

}  // namespace

BENCHMARK_CAPTURE(bm_matmul, serial, false)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(bm_matmul, omp, true)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(bm_conv2d, serial, false)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(bm_conv2d, omp, true)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
