#include "bird/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bird::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Below this many multiply-adds the fork/join overhead outweighs the gain.
constexpr int64_t kParallelMacThreshold = int64_t(1) << 22;

inline bool go_parallel(int64_t macs) {
  return g_parallel.load(std::memory_order_relaxed) &&
         macs >= kParallelMacThreshold;
}
}  // namespace

void set_parallel(bool enabled) {
  g_parallel.store(enabled, std::memory_order_relaxed);
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Generic per-element path; also the remainder path of the blocked kernel.
template <typename T>
inline T conv_out_element(const T* x, int cin, int h, int w_in, const T* w,
                          int k, int stride, int pad, int co, int oy, int ox,
                          T bias) {
  T acc = bias;
  for (int ci = 0; ci < cin; ++ci) {
    const T* xc = x + static_cast<size_t>(ci) * h * w_in;
    const T* wc = w + (static_cast<size_t>(co) * cin + ci) * k * k;
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * stride + ky - pad;
      if (iy < 0 || iy >= h) continue;
      const T* xrow = xc + static_cast<size_t>(iy) * w_in;
      for (int kx = 0; kx < k; ++kx) {
        const int ix = ox * stride + kx - pad;
        if (ix < 0 || ix >= w_in) continue;
        acc += xrow[ix] * wc[ky * k + kx];
      }
    }
  }
  return acc;
}

// Stride-1 row accumulator, blocked over 4 output channels so each loaded
// input value feeds 4 multiply-adds. Per output element the accumulation
// order is still bias, then (ci, ky, kx) ascending.
template <typename T>
void conv2d_forward_s1(const T* x, int cin, int h, int w_in, const T* w,
                       int cout, int k, const T* bias, int pad, T* out, int ho,
                       int wo) {
  constexpr int CB = 4;
  const int nblk = (cout + CB - 1) / CB;
  const int64_t macs =
      static_cast<int64_t>(cout) * cin * k * k * ho * static_cast<int64_t>(wo);
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (go_parallel(macs))
#else
  (void)macs;
#endif
  for (int blk = 0; blk < nblk; ++blk) {
    for (int oy = 0; oy < ho; ++oy) {
      const int co0 = blk * CB;
      const int nb = std::min(CB, cout - co0);
      T* orow[CB] = {nullptr, nullptr, nullptr, nullptr};
      for (int j = 0; j < nb; ++j) {
        orow[j] = out + (static_cast<size_t>(co0 + j) * ho + oy) * wo;
        const T b = bias[co0 + j];
        for (int i = 0; i < wo; ++i) orow[j][i] = b;
      }
      for (int ci = 0; ci < cin; ++ci) {
        const T* xc = x + static_cast<size_t>(ci) * h * w_in;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const T* xrow = xc + static_cast<size_t>(iy) * w_in;
          for (int kx = 0; kx < k; ++kx) {
            const int off = kx - pad;
            const int lo = std::max(0, -off);
            const int hi = std::min(wo, w_in - off);
            if (lo >= hi) continue;
            const T* xs = xrow + off;
            const size_t wbase = static_cast<size_t>(ky) * k + kx;
            if (nb == CB) {
              const T w0 = w[(static_cast<size_t>(co0 + 0) * cin + ci) * k * k + wbase];
              const T w1 = w[(static_cast<size_t>(co0 + 1) * cin + ci) * k * k + wbase];
              const T w2 = w[(static_cast<size_t>(co0 + 2) * cin + ci) * k * k + wbase];
              const T w3 = w[(static_cast<size_t>(co0 + 3) * cin + ci) * k * k + wbase];
              T* o0 = orow[0];
              T* o1 = orow[1];
              T* o2 = orow[2];
              T* o3 = orow[3];
              for (int ox = lo; ox < hi; ++ox) {
                const T v = xs[ox];
                o0[ox] += v * w0;
                o1[ox] += v * w1;
                o2[ox] += v * w2;
                o3[ox] += v * w3;
              }
            } else {
              for (int j = 0; j < nb; ++j) {
                const T ws =
                    w[(static_cast<size_t>(co0 + j) * cin + ci) * k * k + wbase];
                T* o = orow[j];
                for (int ox = lo; ox < hi; ++ox) o[ox] += xs[ox] * ws;
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const T* x, int cin, int h, int w_in, const T* w, int cout,
                    int k, const T* bias, int stride, int pad, T* out, int ho,
                    int wo) {
  if (stride == 1) {
    conv2d_forward_s1(x, cin, h, w_in, w, cout, k, bias, pad, out, ho, wo);
    return;
  }
  const int64_t macs =
      static_cast<int64_t>(cout) * cin * k * k * ho * static_cast<int64_t>(wo);
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (go_parallel(macs))
#else
  (void)macs;
#endif
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < ho; ++oy) {
      T* orow = out + (static_cast<size_t>(co) * ho + oy) * wo;
      for (int ox = 0; ox < wo; ++ox)
        orow[ox] = conv_out_element(x, cin, h, w_in, w, k, stride, pad, co, oy,
                                    ox, bias[co]);
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gout, int cout, int ho, int wo, const T* w,
                           int cin, int k, int stride, int pad, T* gx, int h,
                           int w_in) {
  const int64_t macs =
      static_cast<int64_t>(cout) * cin * k * k * ho * static_cast<int64_t>(wo);
  if (stride == 1) {
    // Row accumulator mirroring the forward: gx[ci,iy,ix] gathers from
    // gout rows shifted by (pad - kx). Order per element: (co, ky, kx).
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (go_parallel(macs))
#endif
    for (int ci = 0; ci < cin; ++ci) {
      for (int iy = 0; iy < h; ++iy) {
        T* grow = gx + (static_cast<size_t>(ci) * h + iy) * w_in;
        for (int co = 0; co < cout; ++co) {
          const T* gc = gout + static_cast<size_t>(co) * ho * wo;
          const T* wc = w + (static_cast<size_t>(co) * cin + ci) * k * k;
          for (int ky = 0; ky < k; ++ky) {
            const int oy = iy + pad - ky;
            if (oy < 0 || oy >= ho) continue;
            const T* grow_src = gc + static_cast<size_t>(oy) * wo;
            for (int kx = 0; kx < k; ++kx) {
              const int off = pad - kx;
              const int lo = std::max(0, -off);
              const int hi = std::min(w_in, wo - off);
              if (lo >= hi) continue;
              const T ws = wc[ky * k + kx];
              const T* gs = grow_src + off;
              for (int ix = lo; ix < hi; ++ix) grow[ix] += gs[ix] * ws;
            }
          }
        }
      }
    }
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (go_parallel(macs))
#endif
  for (int ci = 0; ci < cin; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      T* grow = gx + (static_cast<size_t>(ci) * h + iy) * w_in;
      for (int ix = 0; ix < w_in; ++ix) {
        for (int co = 0; co < cout; ++co) {
          const T* gc = gout + static_cast<size_t>(co) * ho * wo;
          const T* wc = w + (static_cast<size_t>(co) * cin + ci) * k * k;
          for (int ky = 0; ky < k; ++ky) {
            const int num_y = iy + pad - ky;
            if (num_y < 0 || num_y % stride != 0) continue;
            const int oy = num_y / stride;
            if (oy >= ho) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int num_x = ix + pad - kx;
              if (num_x < 0 || num_x % stride != 0) continue;
              const int ox = num_x / stride;
              if (ox >= wo) continue;
              grow[ix] +=
                  gc[static_cast<size_t>(oy) * wo + ox] * wc[ky * k + kx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weights(const T* gout, int cout, int ho, int wo,
                             const T* x, int cin, int h, int w_in, int k,
                             int stride, int pad, T* gw) {
  const int64_t macs =
      static_cast<int64_t>(cout) * cin * k * k * ho * static_cast<int64_t>(wo);
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (go_parallel(macs))
#else
  (void)macs;
#endif
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      const T* gc = gout + static_cast<size_t>(co) * ho * wo;
      const T* xc = x + static_cast<size_t>(ci) * h * w_in;
      T* wc = gw + (static_cast<size_t>(co) * cin + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T acc = T(0);
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const T* xrow = xc + static_cast<size_t>(iy) * w_in;
            const T* grow = gc + static_cast<size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w_in) continue;
              acc += grow[ox] * xrow[ix];
            }
          }
          wc[ky * k + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_bias(const T* gout, int cout, int ho, int wo, T* gb) {
  for (int co = 0; co < cout; ++co) {
    const T* gc = gout + static_cast<size_t>(co) * ho * wo;
    T acc = T(0);
    const int64_t n = static_cast<int64_t>(ho) * wo;
    for (int64_t i = 0; i < n; ++i) acc += gc[i];
    gb[co] += acc;
  }
}

template <typename T>
void matmul_nn(const T* a, int n, int k, const T* b, int m, T* c) {
  const int64_t macs = static_cast<int64_t>(n) * k * m;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (go_parallel(macs))
#else
  (void)macs;
#endif
  for (int i = 0; i < n; ++i) {
    T* crow = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) crow[j] = T(0);
    const T* arow = a + static_cast<size_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const T av = arow[l];
      const T* brow = b + static_cast<size_t>(l) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_tn(const T* a, int k, int n, const T* b, int m, T* c) {
  const int64_t macs = static_cast<int64_t>(n) * k * m;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (go_parallel(macs))
#else
  (void)macs;
#endif
  for (int i = 0; i < n; ++i) {
    T* crow = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) crow[j] = T(0);
    for (int l = 0; l < k; ++l) {
      const T av = a[static_cast<size_t>(l) * n + i];
      const T* brow = b + static_cast<size_t>(l) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_nt(const T* a, int n, int k, const T* b, int m, T* c) {
  const int64_t macs = static_cast<int64_t>(n) * k * m;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (go_parallel(macs))
#else
  (void)macs;
#endif
  for (int i = 0; i < n; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const T* brow = b + static_cast<size_t>(j) * k;
      T acc = T(0);
      for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
      crow[j] = acc;
    }
  }
}

template void conv2d_forward<float>(const float*, int, int, int, const float*,
                                    int, int, const float*, int, int, float*,
                                    int, int);
template void conv2d_forward<double>(const double*, int, int, int,
                                     const double*, int, int, const double*,
                                     int, int, double*, int, int);
template void conv2d_backward_input<float>(const float*, int, int, int,
                                           const float*, int, int, int, int,
                                           float*, int, int);
template void conv2d_backward_input<double>(const double*, int, int, int,
                                            const double*, int, int, int, int,
                                            double*, int, int);
template void conv2d_backward_weights<float>(const float*, int, int, int,
                                             const float*, int, int, int, int,
                                             int, int, float*);
template void conv2d_backward_weights<double>(const double*, int, int, int,
                                              const double*, int, int, int,
                                              int, int, int, double*);
template void conv2d_backward_bias<float>(const float*, int, int, int, float*);
template void conv2d_backward_bias<double>(const double*, int, int, int,
                                           double*);
template void matmul_nn<float>(const float*, int, int, const float*, int,
                               float*);
template void matmul_nn<double>(const double*, int, int, const double*, int,
                                double*);
template void matmul_tn<float>(const float*, int, int, const float*, int,
                               float*);
template void matmul_tn<double>(const double*, int, int, const double*, int,
                                double*);
template void matmul_nt<float>(const float*, int, int, const float*, int,
                               float*);
template void matmul_nt<double>(const double*, int, int, const double*, int,
                                double*);

}  // namespace bird::kernels
