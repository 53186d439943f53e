#pragma once

#include <cstdint>

// Low-level compute kernels. Every kernel accumulates contributions to a
// given output element in one canonical order (documented per kernel), so
// the optimized/OpenMP versions produce bit-identical results to the serial
// reference implementations in bird::kernels::ref — parallel threads only
// ever own whole output elements, never parts of a reduction.
namespace bird::kernels {

// Global switch for OpenMP parallel loops. Kernels additionally gate on a
// work-size threshold, so desk-scale calls stay on the serial fast path.
void set_parallel(bool enabled);
bool parallel_enabled();
int max_threads();

// out[co,oy,ox] = bias[co] + sum over (ci, ky, kx) ascending of
//   x[ci, oy*stride+ky-pad, ox*stride+kx-pad] * w[co,ci,ky,kx]
// (out-of-range taps skipped). Overwrites out.
template <typename T>
void conv2d_forward(const T* x, int cin, int h, int w_in, const T* w, int cout,
                    int k, const T* bias, int stride, int pad, T* out, int ho,
                    int wo);

// gx[ci,iy,ix] += sum over (co, ky, kx) ascending of
//   gout[co,(iy+pad-ky)/stride,(ix+pad-kx)/stride] * w[co,ci,ky,kx]
// restricted to taps where the division is exact and in range. Accumulates.
template <typename T>
void conv2d_backward_input(const T* gout, int cout, int ho, int wo, const T* w,
                           int cin, int k, int stride, int pad, T* gx, int h,
                           int w_in);

// gw[co,ci,ky,kx] += sum over (oy, ox) ascending of gout[co,oy,ox] * x[...].
template <typename T>
void conv2d_backward_weights(const T* gout, int cout, int ho, int wo,
                             const T* x, int cin, int h, int w_in, int k,
                             int stride, int pad, T* gw);

// gb[co] += sum over (oy, ox) ascending of gout[co,oy,ox].
template <typename T>
void conv2d_backward_bias(const T* gout, int cout, int ho, int wo, T* gb);

// C[i,j] = sum over l ascending of A[i,l] * B[l,j].  A: n x k, B: k x m.
// Overwrites C.
template <typename T>
void matmul_nn(const T* a, int n, int k, const T* b, int m, T* c);

// C[i,j] = sum over l ascending of A[l,i] * B[l,j].  A: k x n, B: k x m.
template <typename T>
void matmul_tn(const T* a, int k, int n, const T* b, int m, T* c);

// C[i,j] = sum over l ascending of A[i,l] * B[j,l].  A: n x k, B: m x k.
template <typename T>
void matmul_nt(const T* a, int n, int k, const T* b, int m, T* c);

// Naive textbook implementations with the same canonical accumulation
// orders; kept for tests and the kernel benchmark.
namespace ref {

template <typename T>
void conv2d_forward(const T* x, int cin, int h, int w_in, const T* w, int cout,
                    int k, const T* bias, int stride, int pad, T* out, int ho,
                    int wo);

template <typename T>
void conv2d_backward_input(const T* gout, int cout, int ho, int wo, const T* w,
                           int cin, int k, int stride, int pad, T* gx, int h,
                           int w_in);

template <typename T>
void conv2d_backward_weights(const T* gout, int cout, int ho, int wo,
                             const T* x, int cin, int h, int w_in, int k,
                             int stride, int pad, T* gw);

template <typename T>
void conv2d_backward_bias(const T* gout, int cout, int ho, int wo, T* gb);

template <typename T>
void matmul_nn(const T* a, int n, int k, const T* b, int m, T* c);

}  // namespace ref

}  // namespace bird::kernels
