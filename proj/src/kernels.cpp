#include "gpga/kernels.hpp"

#include <atomic>
#include <cstring>

namespace gpga::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

// ---------------------------------------------------------------- matmul

void matmul_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::memset(ci, 0, n * sizeof(double));
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::memset(ci, 0, n * sizeof(double));
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (parallel_enabled())
        matmul_omp(a, b, c, m, k, n);
    else
        matmul_serial(a, b, c, m, k, n);
}

void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double* ai = a + i * n;
            const double* bj = b + j * n;
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p) s += ai[p] * bj[p];
            c[i * k + j] = s;
        }
    }
}

void matmul_nt_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double* ai = a + i * n;
            const double* bj = b + j * n;
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p) s += ai[p] * bj[p];
            c[i * k + j] = s;
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    if (parallel_enabled())
        matmul_nt_omp(a, b, c, m, n, k);
    else
        matmul_nt_serial(a, b, c, m, n, k);
}

void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < k; ++i) {
        double* ci = c + i * n;
        std::memset(ci, 0, n * sizeof(double));
        for (std::size_t p = 0; p < m; ++p) {
            const double api = a[p * k + i];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

void matmul_tn_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < k; ++i) {
        double* ci = c + i * n;
        std::memset(ci, 0, n * sizeof(double));
        for (std::size_t p = 0; p < m; ++p) {
            const double api = a[p * k + i];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (parallel_enabled())
        matmul_tn_omp(a, b, c, m, k, n);
    else
        matmul_tn_serial(a, b, c, m, k, n);
}

// ---------------------------------------------------------------- conv2d

namespace {

inline void conv2d_forward_one(const double* in, const double* w, const double* bias, double* out,
                               const Conv2dDims& d, std::size_t b) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    const double* inb = in + b * d.in_c * d.in_h * d.in_w;
    double* outb = out + b * d.out_c * oh * ow;
    for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double s = bias[oc];
                for (std::size_t ic = 0; ic < d.in_c; ++ic) {
                    const double* inc = inb + ic * d.in_h * d.in_w;
                    const double* wc = w + (oc * d.in_c + ic) * d.ksize * d.ksize;
                    for (std::size_t ky = 0; ky < d.ksize; ++ky) {
                        const double* row = inc + (y * d.stride + ky) * d.in_w + x * d.stride;
                        const double* wrow = wc + ky * d.ksize;
                        for (std::size_t kx = 0; kx < d.ksize; ++kx) s += row[kx] * wrow[kx];
                    }
                }
                outb[(oc * oh + y) * ow + x] = s;
            }
        }
    }
}

inline void conv2d_backward_input_one(const double* gout, const double* w, double* din, const Conv2dDims& d,
                                      std::size_t b) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    double* dinb = din + b * d.in_c * d.in_h * d.in_w;
    const double* goutb = gout + b * d.out_c * oh * ow;
    std::memset(dinb, 0, d.in_c * d.in_h * d.in_w * sizeof(double));
    for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = goutb[(oc * oh + y) * ow + x];
                for (std::size_t ic = 0; ic < d.in_c; ++ic) {
                    double* dinc = dinb + ic * d.in_h * d.in_w;
                    const double* wc = w + (oc * d.in_c + ic) * d.ksize * d.ksize;
                    for (std::size_t ky = 0; ky < d.ksize; ++ky) {
                        double* row = dinc + (y * d.stride + ky) * d.in_w + x * d.stride;
                        const double* wrow = wc + ky * d.ksize;
                        for (std::size_t kx = 0; kx < d.ksize; ++kx) row[kx] += g * wrow[kx];
                    }
                }
            }
        }
    }
}

// dW for a single output channel, accumulated over the whole batch in
// batch-major order so serial and parallel versions match bitwise.
inline void conv2d_backward_weights_oc(const double* gout, const double* in, double* dw, double* dbias,
                                       const Conv2dDims& d, std::size_t oc) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    double* dwoc = dw + oc * d.in_c * d.ksize * d.ksize;
    std::memset(dwoc, 0, d.in_c * d.ksize * d.ksize * sizeof(double));
    double db = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
        const double* inb = in + b * d.in_c * d.in_h * d.in_w;
        const double* goutb = gout + b * d.out_c * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = goutb[(oc * oh + y) * ow + x];
                db += g;
                for (std::size_t ic = 0; ic < d.in_c; ++ic) {
                    const double* inc = inb + ic * d.in_h * d.in_w;
                    double* wc = dwoc + ic * d.ksize * d.ksize;
                    for (std::size_t ky = 0; ky < d.ksize; ++ky) {
                        const double* row = inc + (y * d.stride + ky) * d.in_w + x * d.stride;
                        double* wrow = wc + ky * d.ksize;
                        for (std::size_t kx = 0; kx < d.ksize; ++kx) wrow[kx] += g * row[kx];
                    }
                }
            }
        }
    }
    dbias[oc] = db;
}

}  // namespace

void conv2d_forward_serial(const double* in, const double* w, const double* bias, double* out, const Conv2dDims& d) {
    for (std::size_t b = 0; b < d.batch; ++b) conv2d_forward_one(in, w, bias, out, d, b);
}

void conv2d_forward_omp(const double* in, const double* w, const double* bias, double* out, const Conv2dDims& d) {
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) conv2d_forward_one(in, w, bias, out, d, b);
}

void conv2d_forward(const double* in, const double* w, const double* bias, double* out, const Conv2dDims& d) {
    if (parallel_enabled())
        conv2d_forward_omp(in, w, bias, out, d);
    else
        conv2d_forward_serial(in, w, bias, out, d);
}

void conv2d_backward_input_serial(const double* gout, const double* w, double* din, const Conv2dDims& d) {
    for (std::size_t b = 0; b < d.batch; ++b) conv2d_backward_input_one(gout, w, din, d, b);
}

void conv2d_backward_input_omp(const double* gout, const double* w, double* din, const Conv2dDims& d) {
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) conv2d_backward_input_one(gout, w, din, d, b);
}

void conv2d_backward_input(const double* gout, const double* w, double* din, const Conv2dDims& d) {
    if (parallel_enabled())
        conv2d_backward_input_omp(gout, w, din, d);
    else
        conv2d_backward_input_serial(gout, w, din, d);
}

void conv2d_backward_weights_serial(const double* gout, const double* in, double* dw, double* dbias,
                                    const Conv2dDims& d) {
    for (std::size_t oc = 0; oc < d.out_c; ++oc) conv2d_backward_weights_oc(gout, in, dw, dbias, d, oc);
}

void conv2d_backward_weights_omp(const double* gout, const double* in, double* dw, double* dbias,
                                 const Conv2dDims& d) {
#pragma omp parallel for schedule(static)
    for (std::size_t oc = 0; oc < d.out_c; ++oc) conv2d_backward_weights_oc(gout, in, dw, dbias, d, oc);
}

void conv2d_backward_weights(const double* gout, const double* in, double* dw, double* dbias, const Conv2dDims& d) {
    if (parallel_enabled())
        conv2d_backward_weights_omp(gout, in, dw, dbias, d);
    else
        conv2d_backward_weights_serial(gout, in, dw, dbias, d);
}

}  // namespace gpga::kernels
