#include <cstddef>

#include "bird/kernels.hpp"

// Serial textbook implementations. These exist to pin down the canonical
// accumulation order: the optimized kernels must match them bit for bit.
namespace bird::kernels::ref {

template <typename T>
void conv2d_forward(const T* x, int cin, int h, int w_in, const T* w, int cout,
                    int k, const T* bias, int stride, int pad, T* out, int ho,
                    int wo) {
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        T acc = bias[co];
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w_in) continue;
              acc += x[(static_cast<size_t>(ci) * h + iy) * w_in + ix] *
                     w[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx];
            }
          }
        }
        out[(static_cast<size_t>(co) * ho + oy) * wo + ox] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gout, int cout, int ho, int wo, const T* w,
                           int cin, int k, int stride, int pad, T* gx, int h,
                           int w_in) {
  for (int ci = 0; ci < cin; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w_in; ++ix) {
        for (int co = 0; co < cout; ++co) {
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
              gx[(static_cast<size_t>(ci) * h + iy) * w_in + ix] +=
                  gout[(static_cast<size_t>(co) * ho + oy) * wo + ox] *
                  w[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx];
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
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T acc = T(0);
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w_in) continue;
              acc += gout[(static_cast<size_t>(co) * ho + oy) * wo + ox] *
                     x[(static_cast<size_t>(ci) * h + iy) * w_in + ix];
            }
          }
          gw[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_bias(const T* gout, int cout, int ho, int wo, T* gb) {
  for (int co = 0; co < cout; ++co) {
    T acc = T(0);
    for (int64_t i = 0; i < static_cast<int64_t>(ho) * wo; ++i)
      acc += gout[static_cast<size_t>(co) * ho * wo + i];
    gb[co] += acc;
  }
}

template <typename T>
void matmul_nn(const T* a, int n, int k, const T* b, int m, T* c) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      T acc = T(0);
      for (int l = 0; l < k; ++l)
        acc += a[static_cast<size_t>(i) * k + l] *
               b[static_cast<size_t>(l) * m + j];
      c[static_cast<size_t>(i) * m + j] = acc;
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

}  // namespace bird::kernels::ref
