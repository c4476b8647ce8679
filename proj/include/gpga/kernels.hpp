#pragma once

#include <cstddef>

// Hot numeric loops: matmul and conv2d, forward and backward.
// Each kernel exists in a serial reference version and an OpenMP version
// that parallelizes over independent output elements with the identical
// inner summation order, so results are bitwise equal between the two.

namespace gpga::kernels {

bool parallel_enabled();
void set_parallel(bool on);

// c[m,n] = a[m,k] @ b[k,n]
void matmul_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

// c[m,k] = a[m,n] @ b[k,n]^T   (backward w.r.t. left matmul operand)
void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);
void matmul_nt_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);

// c[k,n] = a[m,k]^T @ b[m,n]   (backward w.r.t. right matmul operand)
void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_tn_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

struct Conv2dDims {
    std::size_t batch, in_c, in_h, in_w;
    std::size_t out_c, ksize, stride;
    std::size_t out_h() const { return (in_h - ksize) / stride + 1; }
    std::size_t out_w() const { return (in_w - ksize) / stride + 1; }
};

// out[B,OC,OH,OW]; in[B,C,H,W]; w[OC,C,K,K]; bias[OC]. No padding.
void conv2d_forward_serial(const double* in, const double* w, const double* bias, double* out, const Conv2dDims& d);
void conv2d_forward_omp(const double* in, const double* w, const double* bias, double* out, const Conv2dDims& d);
void conv2d_forward(const double* in, const double* w, const double* bias, double* out, const Conv2dDims& d);

// din accumulates nothing beforehand; it is fully written here.
void conv2d_backward_input_serial(const double* gout, const double* w, double* din, const Conv2dDims& d);
void conv2d_backward_input_omp(const double* gout, const double* w, double* din, const Conv2dDims& d);
void conv2d_backward_input(const double* gout, const double* w, double* din, const Conv2dDims& d);

void conv2d_backward_weights_serial(const double* gout, const double* in, double* dw, double* dbias,
                                    const Conv2dDims& d);
void conv2d_backward_weights_omp(const double* gout, const double* in, double* dw, double* dbias,
                                 const Conv2dDims& d);
void conv2d_backward_weights(const double* gout, const double* in, double* dw, double* dbias, const Conv2dDims& d);

}  // namespace gpga::kernels
